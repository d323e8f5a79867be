"""Virtual atomic force microscopy image synthesis.

Converts protein structures (PDB files, OBJ surface meshes, or AlphaFold
accessions) into binary voxel occupancy grids, renders orthographic
height-map views under uniformly random rotations, colorizes them, and
scores image sets with PSNR/SSIM.
"""

from .dataset import (
    GRID_NAME,
    MANIFEST_FORMAT,
    MANIFEST_NAME,
    ViewManifest,
    ViewRecord,
    generate_dataset,
    ingest,
    load_manifest,
    save_manifest,
    view_filename,
    view_rotation,
)
from .errors import (
    DegenerateExtentError,
    DimensionMismatchError,
    EmptyDirectoryError,
    IndexOutOfRangeError,
    MalformedRecordError,
    MissingFileError,
    NetworkError,
    NoAtomsError,
    NoGeometryError,
    NonWatertightError,
    NotFoundError,
    SchemaError,
    TooLargeError,
    TooSmallError,
    UnpairedFileError,
    VafmError,
)
from .geometry import (
    Rng,
    Rotation,
    TriangleMesh,
    derive_seed,
    parse_obj,
    rotate_points,
    sample_rotation,
)
from .metrics import (
    MetricsReport,
    PairResult,
    compare_sets,
    format_table,
    psnr,
    report_to_json,
    ssim,
)
from .render import (
    HeightMap,
    RenderConfig,
    apply_colormap,
    decode_image,
    encode_image,
    load_height_map,
    render_height_map,
    save_height_map,
)
from .structure import (
    BONDI_RADII,
    Atom,
    MolecularModel,
    RadiusTable,
    fetch_alphafold,
    is_valid_accession,
    parse_pdb,
    vdw_radius,
    write_pdb,
)
from .voxelize import (
    VoxelGrid,
    VoxelizeConfig,
    fit_and_pad,
    load_grid,
    save_grid,
    solid_fill_occupancy,
    voxelize_atoms,
    voxelize_mesh,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Atom",
    "BONDI_RADII",
    "DegenerateExtentError",
    "DimensionMismatchError",
    "EmptyDirectoryError",
    "GRID_NAME",
    "HeightMap",
    "IndexOutOfRangeError",
    "MANIFEST_FORMAT",
    "MANIFEST_NAME",
    "MalformedRecordError",
    "MetricsReport",
    "MissingFileError",
    "MolecularModel",
    "NetworkError",
    "NoAtomsError",
    "NoGeometryError",
    "NonWatertightError",
    "NotFoundError",
    "PairResult",
    "RadiusTable",
    "RenderConfig",
    "Rng",
    "Rotation",
    "SchemaError",
    "TooLargeError",
    "TooSmallError",
    "TriangleMesh",
    "UnpairedFileError",
    "VafmError",
    "ViewManifest",
    "ViewRecord",
    "VoxelGrid",
    "VoxelizeConfig",
    "apply_colormap",
    "compare_sets",
    "decode_image",
    "derive_seed",
    "encode_image",
    "fetch_alphafold",
    "fit_and_pad",
    "format_table",
    "generate_dataset",
    "ingest",
    "is_valid_accession",
    "load_grid",
    "load_height_map",
    "load_manifest",
    "parse_obj",
    "parse_pdb",
    "psnr",
    "render_height_map",
    "report_to_json",
    "rotate_points",
    "sample_rotation",
    "save_grid",
    "save_height_map",
    "save_manifest",
    "solid_fill_occupancy",
    "ssim",
    "vdw_radius",
    "view_filename",
    "view_rotation",
    "voxelize_atoms",
    "voxelize_mesh",
    "write_pdb",
]
