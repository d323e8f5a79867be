"""Multi-view dataset generation and manifest handling.

A dataset directory holds the voxel grid (grid.vox), one PNG per view
(view_000.png, ...), and manifest.json describing how everything was
produced.  The manifest is written last, so its presence marks a complete
dataset.  Given the same inputs, seed and software version, regeneration
is byte-identical regardless of thread count: view rotations derive from
per-view child seeds and color normalization uses the global height
maximum, both independent of execution order.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import MissingFileError, SchemaError
from .geometry import Rng, Rotation, derive_seed, sample_rotation
from .render import HeightMap, RenderConfig, apply_colormap, encode_image, render_height_map
from .structure import (
    RadiusTable,
    fetch_alphafold,
    is_valid_accession,
    parse_pdb,
)
from .geometry import parse_obj
from .voxelize import VoxelGrid, VoxelizeConfig, save_grid, voxelize_atoms, voxelize_mesh

MANIFEST_FORMAT = "vafm-manifest/1"
MANIFEST_NAME = "manifest.json"
GRID_NAME = "grid.vox"


@dataclass(frozen=True)
class ViewRecord:
    index: int
    quaternion: tuple[float, float, float, float]  # (w, x, y, z), unit norm
    file: str
    max_height_angstrom: float


@dataclass(frozen=True)
class ViewManifest:
    source_id: str
    seed: int
    resolution: int
    n_views: int
    voxel_size_angstrom: float
    normalization_mode: str
    max_height_angstrom: float
    views: tuple[ViewRecord, ...]


def view_rotation(seed: int, index: int) -> Rotation:
    """Rotation of view `index` for a dataset seed.

    A pure function of (seed, index): views can be generated in any order
    or in parallel without changing the result.
    """
    return sample_rotation(Rng(derive_seed(seed, index)))


def view_filename(index: int) -> str:
    return f"view_{index:03d}.png"


def ingest(
    source: str | Path,
    cfg: VoxelizeConfig,
    radius_table: RadiusTable | None = None,
    include_hetatm: bool = True,
    include_waters: bool = False,
    cache_dir: str | Path | None = None,
) -> tuple[VoxelGrid, str]:
    """Turn an input spec into a voxel grid.

    The spec is a .pdb/.ent file, an .obj file, or an AlphaFold accession.
    The file extension picks the voxelization route; a non-file spec that
    looks like an accession is fetched.
    """
    table = radius_table or RadiusTable.bondi()
    path = Path(source)
    if path.is_file():
        suffix = path.suffix.lower()
        if suffix == ".obj":
            mesh = parse_obj(path.read_text())
            grid = voxelize_mesh(mesh, dataclasses.replace(cfg, mode="mesh"))
            return grid, path.stem
        model = parse_pdb(
            path.read_text(),
            source_id=path.stem,
            include_hetatm=include_hetatm,
            include_waters=include_waters,
        )
        grid = voxelize_atoms(model, table, dataclasses.replace(cfg, mode="atoms"))
        return grid, path.stem
    accession = str(source)
    if not is_valid_accession(accession):
        raise FileNotFoundError(
            f"{source}: not an existing file and not a valid UniProt accession"
        )
    text = fetch_alphafold(accession, cache_dir=cache_dir)
    model = parse_pdb(
        text,
        source_id=accession.upper(),
        include_hetatm=include_hetatm,
        include_waters=include_waters,
    )
    grid = voxelize_atoms(model, table, dataclasses.replace(cfg, mode="atoms"))
    return grid, accession.upper()


def _manifest_doc(manifest: ViewManifest) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "source_id": manifest.source_id,
        "seed": manifest.seed,
        "resolution": manifest.resolution,
        "n_views": manifest.n_views,
        "voxel_size_angstrom": manifest.voxel_size_angstrom,
        "normalization": {
            "mode": manifest.normalization_mode,
            "max_height_angstrom": manifest.max_height_angstrom,
        },
        "views": [
            {
                "index": v.index,
                "quaternion": list(v.quaternion),
                "file": v.file,
                "max_height_angstrom": v.max_height_angstrom,
            }
            for v in manifest.views
        ],
    }


def save_manifest(manifest: ViewManifest, path: str | Path) -> None:
    """Write a manifest document.

    The encoding is stable: loading a manifest and saving it again
    reproduces the file byte for byte.
    """
    Path(path).write_text(json.dumps(_manifest_doc(manifest), indent=2) + "\n")


def generate_dataset(
    source: str | Path,
    out_dir: str | Path,
    n_views: int = 25,
    seed: int = 0,
    image_size: int = 256,
    colormap: str = "hot",
    vox_cfg: VoxelizeConfig | None = None,
    threads: int = 1,
    overwrite: bool = False,
    identity_views: bool = False,
    radius_table: RadiusTable | None = None,
    include_hetatm: bool = True,
    include_waters: bool = False,
    cache_dir: str | Path | None = None,
) -> ViewManifest:
    """Generate a complete multi-view dataset directory.

    Two passes: first every view is rendered to a height map (possibly in
    parallel over views), then all images are colorized against the global
    height maximum so one fixed normalization applies dataset-wide.  The
    manifest is written last via an atomic rename; on failure all files
    written so far are removed.
    """
    if n_views < 1:
        raise ValueError("n_views must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    cfg = vox_cfg or VoxelizeConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    existing = [p for p in out.iterdir()]
    if existing:
        if not overwrite:
            raise FileExistsError(f"{out} is not empty (pass overwrite to regenerate)")
        for p in out.glob("view_*.png"):
            p.unlink()
        for name in (MANIFEST_NAME, GRID_NAME):
            target = out / name
            if target.exists():
                target.unlink()

    grid, source_id = ingest(
        source,
        cfg,
        radius_table=radius_table,
        include_hetatm=include_hetatm,
        include_waters=include_waters,
        cache_dir=cache_dir,
    )

    if identity_views:
        rotations = [Rotation.identity() for _ in range(n_views)]
    else:
        rotations = [view_rotation(seed, i) for i in range(n_views)]

    render_cfg = RenderConfig(image_size=image_size, colormap=colormap)
    written: list[Path] = []
    try:
        grid_path = out / GRID_NAME
        save_grid(grid, grid_path)
        written.append(grid_path)

        def render_one(rot: Rotation) -> HeightMap:
            return render_height_map(grid, rot, render_cfg, threads=1)

        if threads == 1:
            heights = [render_one(r) for r in rotations]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                heights = list(pool.map(render_one, rotations))

        global_max = max(hm.max_height for hm in heights)
        # an all-empty render set still colorizes (to black) with any scale
        color_cfg = RenderConfig(
            image_size=image_size,
            colormap=colormap,
            normalization="fixed",
            max_height=global_max if global_max > 0 else 1.0,
        )

        def write_one(item: tuple[int, HeightMap]) -> None:
            index, hm = item
            encode_image(apply_colormap(hm, color_cfg), out / view_filename(index))

        jobs = list(enumerate(heights))
        for index, _ in jobs:
            written.append(out / view_filename(index))
        if threads == 1:
            for job in jobs:
                write_one(job)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(write_one, jobs))

        manifest = ViewManifest(
            source_id=source_id,
            seed=seed,
            resolution=cfg.resolution,
            n_views=n_views,
            voxel_size_angstrom=grid.voxel_size,
            normalization_mode="fixed",
            max_height_angstrom=global_max,
            views=tuple(
                ViewRecord(
                    index=i,
                    quaternion=rotations[i].as_tuple(),
                    file=view_filename(i),
                    max_height_angstrom=heights[i].max_height,
                )
                for i in range(n_views)
            ),
        )
        tmp = out / (MANIFEST_NAME + ".part")
        tmp.write_text(json.dumps(_manifest_doc(manifest), indent=2) + "\n")
        os.replace(tmp, out / MANIFEST_NAME)
        return manifest
    except BaseException:
        for p in written:
            try:
                p.unlink()
            except OSError:
                pass
        tmp = out / (MANIFEST_NAME + ".part")
        if tmp.exists():
            tmp.unlink()
        raise


def load_manifest(dataset_dir: str | Path) -> ViewManifest:
    """Read and validate a dataset manifest.

    Schema violations (wrong format tag, missing keys, non-unit
    quaternions, inconsistent view indices) raise SchemaError; view files
    referenced but absent raise MissingFileError.
    """
    root = Path(dataset_dir)
    path = root / MANIFEST_NAME if root.is_dir() else root
    if not path.is_file():
        raise MissingFileError(f"{path}: manifest not found")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc

    if not isinstance(doc, dict) or doc.get("format") != MANIFEST_FORMAT:
        raise SchemaError(f"{path}: expected format {MANIFEST_FORMAT!r}")
    try:
        norm = doc["normalization"]
        views_doc = doc["views"]
        manifest = ViewManifest(
            source_id=str(doc["source_id"]),
            seed=int(doc["seed"]),
            resolution=int(doc["resolution"]),
            n_views=int(doc["n_views"]),
            voxel_size_angstrom=float(doc["voxel_size_angstrom"]),
            normalization_mode=str(norm["mode"]),
            max_height_angstrom=float(norm["max_height_angstrom"]),
            views=tuple(
                ViewRecord(
                    index=int(v["index"]),
                    quaternion=tuple(float(q) for q in v["quaternion"]),
                    file=str(v["file"]),
                    max_height_angstrom=float(v["max_height_angstrom"]),
                )
                for v in views_doc
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed manifest ({exc})") from exc

    if manifest.n_views != len(manifest.views):
        raise SchemaError(
            f"{path}: n_views={manifest.n_views} but {len(manifest.views)} view entries"
        )
    if sorted(v.index for v in manifest.views) != list(range(manifest.n_views)):
        raise SchemaError(f"{path}: view indices are not 0..{manifest.n_views - 1}")
    for v in manifest.views:
        if len(v.quaternion) != 4:
            raise SchemaError(f"{path}: view {v.index}: quaternion must have 4 components")
        norm2 = math.sqrt(sum(c * c for c in v.quaternion))
        if abs(norm2 - 1.0) > 1e-6:
            raise SchemaError(
                f"{path}: view {v.index}: quaternion norm {norm2} is not 1"
            )
        target = path.parent / v.file
        if not target.is_file():
            raise MissingFileError(f"{target}: view file referenced by manifest is missing")
    return manifest
