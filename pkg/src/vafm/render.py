"""Orthographic height-map rendering of occupancy grids.

The camera looks along -Z of the view frame; the grid is conceptually
rotated about its center by a quaternion, which we realize by casting
inverse-rotated rays through the unrotated grid.  Rays are traversed with
an exact voxel-stepping (DDA) scheme so the first occupied voxel along
each ray is found without sampling artifacts.  Pixel values are heights in
angstroms above a substrate plane placed at the lowest view-space corner
of any occupied voxel, so the silhouette background is exactly zero.

Image convention: row 0 is the top of the image (+view-y), columns run
along +view-x.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import SchemaError
from .geometry import Rotation
from .voxelize import VoxelGrid

HEIGHT_MAGIC = b"VHM1"

# pinned so identical pixels yield identical PNG bytes across runs
_PNG_COMPRESS_LEVEL = 6


@dataclass(frozen=True)
class RenderConfig:
    image_size: int = 256
    colormap: str = "hot"  # "hot" | "gray"
    normalization: str = "per_image"  # "per_image" | "fixed"
    max_height: float | None = None  # required for "fixed"

    def __post_init__(self):
        if self.image_size < 1:
            raise ValueError("image_size must be >= 1")
        if self.colormap not in ("hot", "gray"):
            raise ValueError(f"unknown colormap {self.colormap!r}")
        if self.normalization not in ("per_image", "fixed"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.normalization == "fixed" and (self.max_height is None or self.max_height <= 0):
            raise ValueError("fixed normalization requires max_height > 0")


@dataclass(frozen=True)
class HeightMap:
    """Rendered height field in angstroms; values[0, :] is the image top."""

    values: np.ndarray  # (H, W) float64
    pixel_size: float  # angstroms per pixel

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("values must be a 2D array")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.pixel_size <= 0:
            raise ValueError("pixel_size must be positive")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def max_height(self) -> float:
        return float(self.values.max())


def save_height_map(hm: HeightMap, path: str | Path) -> None:
    """Write the raw height field (VHM1: 16-byte header + f32 LE rows)."""
    header = HEIGHT_MAGIC + struct.pack("<IIf", hm.width, hm.height, hm.pixel_size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(hm.values.astype("<f4").tobytes())


def load_height_map(path: str | Path) -> HeightMap:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != HEIGHT_MAGIC:
        raise SchemaError(f"{path}: not a height dump")
    width, height, pixel_size = struct.unpack_from("<IIf", data, 4)
    expected = width * height * 4
    payload = data[16 : 16 + expected]
    if len(payload) != expected:
        raise SchemaError(f"{path}: truncated height payload")
    values = np.frombuffer(payload, dtype="<f4").reshape(height, width).astype(np.float64)
    return HeightMap(values=values, pixel_size=float(pixel_size))


def _trace_block(
    occ: np.ndarray,
    ilo: np.ndarray,
    ihi: np.ndarray,
    gmin: np.ndarray,
    h: float,
    extent: float,
    u: np.ndarray,
    ex: np.ndarray,
    ey: np.ndarray,
    center: np.ndarray,
    width: int,
    rows: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Trace all rays for the given image rows.

    Returns (view-space z of each hit, hit mask), shaped (len(rows), width).
    Heights are taken from exact voxel face coordinates, not accumulated
    ray parameters, so axis-aligned views reproduce the occupancy grid
    projection bit for bit.
    """
    ps = extent / width
    ax_off = (np.arange(width) + 0.5) * ps - 0.5 * extent
    ay_off = 0.5 * extent - (rows + 0.5) * ps
    o = (
        center[None, None, :]
        + ax_off[None, :, None] * ex[None, None, :]
        + ay_off[:, None, None] * ey[None, None, :]
    ).reshape(-1, 3)
    n = o.shape[0]
    d = -u

    blo = gmin + ilo * h
    bhi = gmin + (ihi + 1) * h

    # slab intersection with the occupied-content box; remember the entry axis
    t0 = np.full(n, -np.inf)
    t1 = np.full(n, np.inf)
    entry_ax = np.zeros(n, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    for ax in range(3):
        if d[ax] != 0.0:
            ta = (blo[ax] - o[:, ax]) / d[ax]
            tb = (bhi[ax] - o[:, ax]) / d[ax]
            tn = np.minimum(ta, tb)
            tf = np.maximum(ta, tb)
            far = tn > t0  # strict: ties keep the lower axis
            entry_ax[far] = ax
            np.maximum(t0, tn, out=t0)
            np.minimum(t1, tf, out=t1)
        else:
            alive &= (o[:, ax] >= blo[ax]) & (o[:, ax] <= bhi[ax])
    alive &= t0 <= t1

    zhit = np.zeros(n)
    hit = np.zeros(n, dtype=bool)
    active = np.flatnonzero(alive)
    if active.size == 0:
        return zhit.reshape(len(rows), width), hit.reshape(len(rows), width)

    # initial voxel: exact index on the entry axis, floor of the entry point
    # elsewhere (clamped against boundary roundoff)
    p0 = o[active] + t0[active, None] * d[None, :]
    idx = np.clip(
        np.floor((p0 - gmin[None, :]) / h).astype(np.int64), ilo[None, :], ihi[None, :]
    )
    eax = entry_ax[active]
    for ax in range(3):
        sel = eax == ax
        if d[ax] > 0:
            idx[sel, ax] = ilo[ax]
        elif d[ax] < 0:
            idx[sel, ax] = ihi[ax]

    step = np.sign(d).astype(np.int64)
    with np.errstate(divide="ignore"):
        tdelta = np.where(d != 0.0, h / np.abs(d), np.inf)
    tmax = np.empty((active.size, 3))
    for ax in range(3):
        if d[ax] > 0:
            tmax[:, ax] = (gmin[ax] + (idx[:, ax] + 1) * h - o[active, ax]) / d[ax]
        elif d[ax] < 0:
            tmax[:, ax] = (gmin[ax] + idx[:, ax] * h - o[active, ax]) / d[ax]
        else:
            tmax[:, ax] = np.inf

    last_ax = eax.copy()
    occ_flat = np.ascontiguousarray(occ).reshape(-1)
    strides = np.array([occ.shape[1] * occ.shape[2], occ.shape[2], 1], dtype=np.int64)
    lin = idx @ strides
    lin_step = step * strides

    while active.size:
        occupied = occ_flat.take(lin)
        if occupied.any():
            rays = np.flatnonzero(occupied)
            ar = np.arange(rays.size)
            fax = last_ax[rays]
            kface = idx[rays, fax] + (d[fax] < 0)
            w = gmin[fax] + kface * h
            o_hit = o[active[rays]]
            t_hit = (w - o_hit[ar, fax]) / d[fax]
            p_hit = o_hit + t_hit[:, None] * d[None, :]
            p_hit[ar, fax] = w
            zhit[active[rays]] = p_hit[:, 0] * u[0] + p_hit[:, 1] * u[1] + p_hit[:, 2] * u[2]
            hit[active[rays]] = True
            cont = ~occupied
            active = active[cont]
            idx = idx[cont]
            tmax = tmax[cont]
            last_ax = last_ax[cont]
            lin = lin[cont]
            if active.size == 0:
                break

        step_ax = np.argmin(tmax, axis=1)  # first minimum: ties step x, then y, then z
        ar = np.arange(active.size)
        moved = idx[ar, step_ax] + step[step_ax]
        idx[ar, step_ax] = moved
        tmax[ar, step_ax] += tdelta[step_ax]
        lin += lin_step[step_ax]
        last_ax = step_ax
        inb = (moved >= ilo[step_ax]) & (moved <= ihi[step_ax])
        active = active[inb]
        idx = idx[inb]
        tmax = tmax[inb]
        last_ax = last_ax[inb]
        lin = lin[inb]

    return zhit.reshape(len(rows), width), hit.reshape(len(rows), width)


def _substrate_level(occ: np.ndarray, ilo: np.ndarray, ihi: np.ndarray, gmin: np.ndarray, h: float, u: np.ndarray) -> float:
    """Lowest view-space z over all corners of occupied voxels.

    The corner minimum factorizes per axis: for voxel index i on axis a the
    two faces sit at F[i] and F[i+1], contributing min(u_a*F[i], u_a*F[i+1]).
    """
    contrib = []
    for ax in range(3):
        faces = gmin[ax] + np.arange(ilo[ax], ihi[ax] + 2) * h
        vals = u[ax] * faces
        contrib.append(np.minimum(vals[:-1], vals[1:]))
    cx, cy, cz = contrib
    sub = occ[ilo[0] : ihi[0] + 1, ilo[1] : ihi[1] + 1, ilo[2] : ihi[2] + 1]
    best = np.inf
    plane_xy = cx[:, None] + cy[None, :]
    for k in range(sub.shape[2]):
        mask = sub[:, :, k]
        if mask.any():
            level = plane_xy[mask].min() + cz[k]
            if level < best:
                best = level
    return float(best)


def render_height_map(
    grid: VoxelGrid, rotation: Rotation, cfg: RenderConfig, threads: int = 1
) -> HeightMap:
    """Render one orthographic top-down height map of the rotated grid.

    Every pixel not covered by the rotated occupancy is exactly 0; covered
    pixels carry the height of the first occupied voxel surface above the
    substrate plane.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    size = cfg.image_size
    occ = grid.as_array()
    extent = grid.extent
    pixel_size = extent / size

    bounds = grid.occupied_bounds()
    if bounds is None:
        return HeightMap(values=np.zeros((size, size)), pixel_size=pixel_size)
    ilo, ihi = bounds

    h = grid.voxel_size
    gmin = grid.origin - 0.5 * h
    center = gmin + 0.5 * extent
    rot = rotation.matrix()
    ex, ey, u = rot[0], rot[1], rot[2]

    rows = np.arange(size)
    if threads == 1:
        zv, hm = _trace_block(occ, ilo, ihi, gmin, h, extent, u, ex, ey, center, size, rows)
    else:
        blocks = np.array_split(rows, min(threads, size))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(
                    lambda blk: _trace_block(
                        occ, ilo, ihi, gmin, h, extent, u, ex, ey, center, size, blk
                    ),
                    blocks,
                )
            )
        zv = np.concatenate([p[0] for p in parts], axis=0)
        hm = np.concatenate([p[1] for p in parts], axis=0)

    z0 = _substrate_level(occ, ilo, ihi, gmin, h, u)
    values = np.zeros((size, size))
    values[hm] = np.maximum(zv[hm] - z0, 0.0)
    return HeightMap(values=values, pixel_size=pixel_size)


def apply_colormap(hm: HeightMap, cfg: RenderConfig) -> np.ndarray:
    """Map heights to 8-bit RGB.

    Heights normalize to t in [0, 1] (dividing by the image maximum, or by
    cfg.max_height when normalization is "fixed"), then:

        hot:  R = clip(3t, 0, 1), G = clip(3t - 1, 0, 1), B = clip(3t - 2, 0, 1)
        gray: R = G = B = t

    and each channel quantizes as floor(255 c + 0.5).
    """
    if cfg.normalization == "fixed":
        denom = cfg.max_height
    else:
        denom = hm.max_height
    if denom > 0:
        t = np.clip(hm.values / denom, 0.0, 1.0)
    else:
        t = np.zeros_like(hm.values)

    if cfg.colormap == "hot":
        r = np.clip(3.0 * t, 0.0, 1.0)
        g = np.clip(3.0 * t - 1.0, 0.0, 1.0)
        b = np.clip(3.0 * t - 2.0, 0.0, 1.0)
        channels = np.stack([r, g, b], axis=-1)
    else:
        channels = np.repeat(t[:, :, None], 3, axis=-1)
    return np.floor(255.0 * channels + 0.5).astype(np.uint8)


def encode_image(rgb: np.ndarray, path: str | Path) -> None:
    """Write an (H, W, 3) uint8 array as PNG with pinned compression."""
    rgb = np.asarray(rgb)
    if rgb.dtype != np.uint8 or rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) uint8 array")
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG", compress_level=_PNG_COMPRESS_LEVEL)


def decode_image(path: str | Path) -> np.ndarray:
    """Read an image file as an (H, W, 3) uint8 RGB array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))
