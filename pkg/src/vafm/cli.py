"""Command line interface.

Subcommands: fetch, voxelize, render, dataset, metrics, info.  Exit codes:
0 on success, 1 on usage errors, 2 on runtime failures (I/O, network,
malformed inputs).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

from .dataset import generate_dataset, ingest, load_manifest, view_rotation
from .errors import VafmError
from .geometry import Rotation
from .metrics import compare_sets, format_table, report_to_json
from .render import (
    HEIGHT_MAGIC,
    RenderConfig,
    apply_colormap,
    decode_image,
    encode_image,
    load_height_map,
    render_height_map,
    save_height_map,
)
from .structure import ALPHAFOLD_MODEL_VERSION, fetch_alphafold, is_valid_accession
from .voxelize import GRID_MAGIC, VoxelizeConfig, load_grid, save_grid

log = logging.getLogger("vafm")


class UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we want exit(1)
        raise UsageError(f"{self.prog}: {message}")


def _parse_quat(text: str) -> Rotation:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("quaternion must be 'w,x,y,z'")
    try:
        w, x, y, z = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad quaternion component: {exc}") from exc
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    if norm == 0.0:
        raise argparse.ArgumentTypeError("quaternion must be nonzero")
    if abs(norm - 1.0) > 1e-6:
        log.warning("quaternion norm %.9f differs from 1; normalizing", norm)
    return Rotation.from_components(w, x, y, z)


def _vox_cfg(args) -> VoxelizeConfig:
    return VoxelizeConfig(
        resolution=args.resolution,
        probe_inflation=args.probe_inflation,
        margin=args.margin,
        fill=args.fill,
        strict_watertight=args.strict_watertight,
    )


def _add_vox_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--resolution", type=int, default=256, help="cubic grid resolution (default 256)")
    p.add_argument(
        "--probe-inflation",
        type=float,
        default=0.0,
        help="added to every atom radius, in angstroms (default 0; 1.4 approximates a solvent surface)",
    )
    p.add_argument("--margin", type=int, default=2, help="empty border in voxels (default 2)")
    p.add_argument(
        "--fill",
        choices=["solid", "surface"],
        default="solid",
        help="mesh route: fill the interior or keep only the shell",
    )
    p.add_argument(
        "--strict-watertight",
        action="store_true",
        help="fail instead of falling back to surface-only on open meshes",
    )
    p.add_argument("--exclude-hetatm", action="store_true", help="skip HETATM records")
    p.add_argument("--include-waters", action="store_true", help="keep water residues")


def _add_quiet(p: argparse.ArgumentParser) -> None:
    p.add_argument("--quiet", action="store_true", help="suppress informational output")


def _say(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message)


def _cmd_fetch(args) -> None:
    if not is_valid_accession(args.accession):
        raise UsageError(f"{args.accession!r} is not a valid UniProt accession")
    accession = args.accession.upper()
    text = fetch_alphafold(accession, cache_dir=args.cache_dir)
    out = Path(args.output or f"AF-{accession}-F1-model_{ALPHAFOLD_MODEL_VERSION}.pdb")
    out.write_text(text)
    _say(args, str(out))


def _cmd_voxelize(args) -> None:
    grid, source_id = ingest(
        args.input,
        _vox_cfg(args),
        include_hetatm=not args.exclude_hetatm,
        include_waters=args.include_waters,
        cache_dir=args.cache_dir,
    )
    save_grid(grid, args.output)
    _say(
        args,
        f"{source_id}: {grid.dims[0]}x{grid.dims[1]}x{grid.dims[2]} grid, "
        f"voxel {grid.voxel_size:.4f} A, {grid.count_occupied()} occupied -> {args.output}",
    )


def _cmd_render(args) -> None:
    grid = load_grid(args.grid)
    if args.quat is not None:
        rot = args.quat
    elif args.seed is not None:
        rot = view_rotation(args.seed, args.view_index)
    else:
        rot = Rotation.identity()
    if args.max_height is not None:
        cfg = RenderConfig(
            image_size=args.size,
            colormap=args.colormap,
            normalization="fixed",
            max_height=args.max_height,
        )
    else:
        cfg = RenderConfig(image_size=args.size, colormap=args.colormap)
    hm = render_height_map(grid, rot, cfg, threads=args.threads)
    encode_image(apply_colormap(hm, cfg), args.output)
    if args.dump_heights:
        save_height_map(hm, args.dump_heights)
    _say(args, f"max height {hm.max_height:.4f} A -> {args.output}")


def _cmd_dataset(args) -> None:
    started = time.perf_counter()
    manifest = generate_dataset(
        args.input,
        args.output,
        n_views=args.views,
        seed=args.seed,
        image_size=args.size,
        colormap=args.colormap,
        vox_cfg=_vox_cfg(args),
        threads=args.threads,
        overwrite=args.overwrite,
        identity_views=args.identity_views,
        include_hetatm=not args.exclude_hetatm,
        include_waters=args.include_waters,
        cache_dir=args.cache_dir,
    )
    elapsed = time.perf_counter() - started
    _say(
        args,
        f"{manifest.source_id}: {manifest.n_views} views -> {args.output} "
        f"(seed {manifest.seed}, max height {manifest.max_height_angstrom:.4f} A, "
        f"{elapsed:.1f}s)",
    )


def _cmd_metrics(args) -> None:
    report = compare_sets(args.pred_dir, args.gt_dir)
    json_to_stdout = args.json == "-"
    if not args.quiet and not json_to_stdout:
        sys.stdout.write(format_table(report))
    if args.json:
        text = report_to_json(report)
        if json_to_stdout:
            sys.stdout.write(text)
        else:
            Path(args.json).write_text(text)


def _cmd_info(args) -> None:
    path = Path(args.path)
    if path.is_dir() or path.name == "manifest.json":
        manifest = load_manifest(path)
        _say(
            args,
            f"dataset {manifest.source_id}: {manifest.n_views} views, seed {manifest.seed}, "
            f"resolution {manifest.resolution}, voxel {manifest.voxel_size_angstrom:.4f} A, "
            f"normalization {manifest.normalization_mode} "
            f"(max {manifest.max_height_angstrom:.4f} A)",
        )
        return
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no such file or directory")
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == GRID_MAGIC:
        grid = load_grid(path)
        occupied = grid.count_occupied()
        total = grid.dims[0] * grid.dims[1] * grid.dims[2]
        _say(
            args,
            f"grid {grid.dims[0]}x{grid.dims[1]}x{grid.dims[2]}, "
            f"voxel {grid.voxel_size:.4f} A, origin "
            f"({grid.origin[0]:.3f}, {grid.origin[1]:.3f}, {grid.origin[2]:.3f}), "
            f"{occupied} occupied ({100.0 * occupied / total:.2f}%)",
        )
        return
    if magic == HEIGHT_MAGIC:
        hm = load_height_map(path)
        _say(
            args,
            f"height map {hm.width}x{hm.height}, pixel {hm.pixel_size:.4f} A, "
            f"max {hm.max_height:.4f} A",
        )
        return
    if magic[:2] == b"\x89P":
        img = decode_image(path)
        _say(args, f"image {img.shape[1]}x{img.shape[0]}, {img.shape[2]} channels")
        return
    raise VafmError(f"{path}: unrecognized file type")


def build_parser() -> _Parser:
    parser = _Parser(prog="vafm", description="Virtual AFM image synthesis and evaluation.")
    parser.add_argument("--version", action="version", version="%(prog)s 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("fetch", help="download a predicted structure by accession")
    p.add_argument("accession", help="UniProt accession, e.g. P00698")
    p.add_argument(
        "-o", "--output", help="write the PDB here (default: AF-<ACC>-F1-model_v4.pdb)"
    )
    p.add_argument("--cache-dir", help="override the download cache directory")
    _add_quiet(p)
    p.set_defaults(func=_cmd_fetch)

    p = sub.add_parser("voxelize", help="voxelize a PDB/OBJ file or accession")
    p.add_argument("input", help="PDB path, OBJ path, or accession")
    p.add_argument("-o", "--output", required=True, help="output grid file (.vox)")
    p.add_argument("--cache-dir", help="download cache directory for accessions")
    _add_vox_options(p)
    _add_quiet(p)
    p.set_defaults(func=_cmd_voxelize)

    p = sub.add_parser("render", help="render one view of a voxel grid")
    p.add_argument("grid", help="grid file produced by voxelize")
    p.add_argument("-o", "--output", required=True, help="output PNG path")
    p.add_argument(
        "--quat",
        type=_parse_quat,
        help="view rotation quaternion 'w,x,y,z' (default: identity)",
    )
    p.add_argument("--seed", type=int, help="sample the rotation from this seed instead")
    p.add_argument(
        "--view-index", type=int, default=0, help="view index within --seed (default 0)"
    )
    p.add_argument("--size", type=int, default=256, help="image size in pixels (default 256)")
    p.add_argument("--colormap", choices=["hot", "gray"], default="hot")
    p.add_argument(
        "--max-height",
        type=float,
        help="fixed normalization ceiling in angstroms (default: per-image max)",
    )
    p.add_argument("--dump-heights", help="also write the raw height field here")
    p.add_argument("--threads", type=int, default=1)
    _add_quiet(p)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("dataset", help="generate a multi-view dataset")
    p.add_argument("input", help="PDB path, OBJ path, or accession")
    p.add_argument("-o", "--output", required=True, help="output dataset directory")
    p.add_argument("--views", type=int, default=25, help="number of views (default 25)")
    p.add_argument("--seed", type=int, default=0, help="dataset seed (default 0)")
    p.add_argument("--size", type=int, default=256, help="image size in pixels (default 256)")
    p.add_argument("--colormap", choices=["hot", "gray"], default="hot")
    p.add_argument("--threads", type=int, default=1, help="worker threads over views")
    p.add_argument("--overwrite", action="store_true", help="replace an existing dataset")
    p.add_argument(
        "--identity-views",
        action="store_true",
        help="debug: force the identity rotation for every view",
    )
    p.add_argument("--cache-dir", help="download cache directory for accessions")
    _add_vox_options(p)
    _add_quiet(p)
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("metrics", help="compare two directories of images")
    p.add_argument("pred_dir", help="directory of predicted/rendered images")
    p.add_argument("gt_dir", help="directory of reference images")
    p.add_argument("--json", help="write a JSON report here ('-' for stdout)")
    _add_quiet(p)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("info", help="summarize a grid, dataset, height dump, or image")
    p.add_argument("path")
    _add_quiet(p)
    p.set_defaults(func=_cmd_info)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "quiet", False):
        log.setLevel(logging.ERROR)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (VafmError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
