"""Shared fixtures-in-code: mesh builders and brute-force oracles.

Everything here is deliberately naive (double loops, per-voxel slab tests)
so it can serve as an independent reference for the vectorized library
code.
"""

from __future__ import annotations

import math

import numpy as np

from vafm import TriangleMesh


def cube_mesh(side=10.0, center=(0.0, 0.0, 0.0)):
    c = np.asarray(center, dtype=float)
    s = side / 2.0
    corners = np.array(
        [
            [-s, -s, -s],
            [s, -s, -s],
            [s, s, -s],
            [-s, s, -s],
            [-s, -s, s],
            [s, -s, s],
            [s, s, s],
            [-s, s, s],
        ]
    )
    faces = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # -z
            [4, 5, 6], [4, 6, 7],  # +z
            [0, 1, 5], [0, 5, 4],  # -y
            [3, 7, 6], [3, 6, 2],  # +y
            [0, 4, 7], [0, 7, 3],  # -x
            [1, 2, 6], [1, 6, 5],  # +x
        ]
    )
    return TriangleMesh(vertices=corners + c, triangles=faces)


def icosphere_mesh(subdivisions=2, radius=1.0, center=(0.0, 0.0, 0.0)):
    phi = (1.0 + 5.0**0.5) / 2.0
    raw = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    verts = [np.asarray(v, dtype=float) / np.linalg.norm(v) for v in raw]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined
    vertices = np.array(verts) * radius + np.asarray(center, dtype=float)
    return TriangleMesh(vertices=vertices, triangles=np.array(faces))


def merge_meshes(*meshes):
    verts = []
    tris = []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += len(m.vertices)
    return TriangleMesh(vertices=np.vstack(verts), triangles=np.vstack(tris))


def helix_pdb(n_residues=200):
    """Deterministic globular helix, styled like a predicted-model PDB."""
    lines = [
        "HEADER    UNCLASSIFIED                            01-JAN-00   XXXX",
        "TITLE     SYNTHETIC HELIX TEST STRUCTURE",
        "MODEL        1",
    ]
    serial = 1
    offsets = [
        ("N", "N", 0.0, 0.0, 0.0),
        ("CA", "C", 1.2, 0.3, 0.4),
        ("C", "C", 2.1, -0.4, 1.0),
        ("O", "O", 2.6, -1.3, 0.4),
        ("CB", "C", 1.5, 1.6, 1.2),
    ]
    for res in range(n_residues):
        t = res * 0.35
        rad = 9.0 + 6.0 * math.sin(0.35 * t)
        cx = rad * math.cos(t)
        cy = rad * math.sin(t)
        cz = 16.0 * math.sin(0.11 * t) + 0.09 * t
        for name, element, dx, dy, dz in offsets:
            lines.append(
                f"ATOM  {serial:>5}  {name:<3} ALA A{res + 1:>4}    "
                f"{cx + dx:8.3f}{cy + dy:8.3f}{cz + dz:8.3f}  1.00  0.00"
                f"           {element:>2}"
            )
            serial += 1
    lines += ["ENDMDL", "END", ""]
    return "\n".join(lines)


def point_in_mesh_grid(mesh, origin, voxel_size, dims):
    """Reference point-in-mesh at voxel centers: count ray crossings ahead
    of each center with the Moller-Trumbore intersection test.

    The ray direction is a fixed generic vector so that rays from grid
    centers never run along triangle edges of axis-aligned geometry.
    """
    v = mesh.vertices
    t = mesh.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    e1 = b - a
    e2 = c - a
    d = np.array([0.5279341634, 0.3018479215, 0.7930216413])
    d /= np.linalg.norm(d)
    pvec = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = det != 0.0
    origin = np.asarray(origin, dtype=float)
    occ = np.zeros(tuple(int(n) for n in dims), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(occ.shape[0]):
            for j in range(occ.shape[1]):
                for k in range(occ.shape[2]):
                    o = origin + np.array([i, j, k]) * voxel_size
                    tvec = o - a
                    u = np.einsum("ij,ij->i", tvec, pvec) / det
                    qvec = np.cross(tvec, e1)
                    w = (qvec @ d) / det
                    tt = np.einsum("ij,ij->i", e2, qvec) / det
                    hits = ok & (u >= 0) & (w >= 0) & (u + w <= 1) & (tt > 0)
                    occ[i, j, k] = int(hits.sum()) % 2 == 1
    return occ


def identity_projection(grid, size):
    """Direct overhead projection: per-column top height above the lowest
    occupied voxel bottom, sampled at pixel centers."""
    occ = grid.as_array()
    h = grid.voxel_size
    nx, ny, nz = occ.shape
    gmin = grid.origin - 0.5 * h
    extent = grid.extent
    ps = extent / size
    center_x = gmin[0] + 0.5 * extent
    center_y = gmin[1] + 0.5 * extent
    # identity view: the substrate is the bottom face of the lowest occupied voxel
    ks = np.flatnonzero(occ.any(axis=(0, 1)))
    z0 = gmin[2] + ks.min() * h
    values = np.zeros((size, size))
    for row in range(size):
        y = center_y + ((size - 1) / 2.0 - row) * ps  # row 0 at the +y edge
        j = int(np.floor((y - gmin[1]) / h))
        for col in range(size):
            x = center_x + (col - (size - 1) / 2.0) * ps
            i = int(np.floor((x - gmin[0]) / h))
            if 0 <= i < nx and 0 <= j < ny:
                zs = np.flatnonzero(occ[i, j, :])
                if len(zs):
                    top = gmin[2] + (zs.max() + 1) * h
                    values[row, col] = top - z0
    return values


def brute_render(grid, rotation, size):
    """Reference renderer: per-pixel slab test against every occupied voxel.

    Returns (heights, hit mask) with the same substrate convention as the
    library renderer (lowest view-space corner of any occupied voxel).
    """
    occ = grid.as_array()
    h = grid.voxel_size
    gmin = grid.origin - 0.5 * h
    extent = grid.extent
    ps = extent / size
    center = gmin + 0.5 * extent
    m = rotation.matrix()
    ex, ey, u = m[0], m[1], m[2]
    d = -u
    vox = np.argwhere(occ)
    blo = gmin + vox * h
    bhi = blo + h

    corner_heights = []
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                corner_heights.append((gmin + (vox + [dx, dy, dz]) * h) @ u)
    z0 = float(np.min(corner_heights))

    heights = np.zeros((size, size))
    hits = np.zeros((size, size), dtype=bool)
    for py in range(size):
        b = 0.5 * extent - (py + 0.5) * ps
        for px in range(size):
            a = (px + 0.5) * ps - 0.5 * extent
            o = center + a * ex + b * ey
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (blo - o) / d
                t2 = (bhi - o) / d
            tn = np.fmin(t1, t2)
            tf = np.fmax(t1, t2)
            for ax in range(3):
                if d[ax] == 0.0:
                    inside = (o[ax] >= blo[:, ax]) & (o[ax] <= bhi[:, ax])
                    tn[:, ax] = np.where(inside, -np.inf, np.inf)
                    tf[:, ax] = np.where(inside, np.inf, -np.inf)
            t0 = tn.max(axis=1)
            t_end = tf.min(axis=1)
            valid = t0 <= t_end
            if not valid.any():
                continue
            hits[py, px] = True
            p = o + t0[valid].min() * d
            heights[py, px] = p @ u - z0
    return heights, hits


def psnr_reference(x, y):
    """Direct-summation PSNR over all channels."""
    se = 0.0
    n = 0
    xf = np.asarray(x, dtype=np.float64).ravel()
    yf = np.asarray(y, dtype=np.float64).ravel()
    for xi, yi in zip(xf, yf):
        diff = xi - yi
        se += diff * diff
        n += 1
    mse = se / n
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(255.0**2 / mse)


def ssim_reference(x, y):
    """Direct double-loop SSIM with the declared conventions."""

    def luma(img):
        img = np.asarray(img, dtype=np.float64)
        out = np.zeros(img.shape[:2])
        for i in range(img.shape[0]):
            for j in range(img.shape[1]):
                out[i, j] = 0.299 * img[i, j, 0] + 0.587 * img[i, j, 1] + 0.114 * img[i, j, 2]
        return out

    gx = luma(x)
    gy = luma(y)
    win = np.zeros((11, 11))
    for i in range(11):
        for j in range(11):
            win[i, j] = math.exp(-((i - 5) ** 2 + (j - 5) ** 2) / (2.0 * 1.5**2))
    win /= win.sum()
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    height, width = gx.shape
    values = []
    for i in range(height - 10):
        for j in range(width - 10):
            wx = gx[i : i + 11, j : j + 11]
            wy = gy[i : i + 11, j : j + 11]
            mu1 = (win * wx).sum()
            mu2 = (win * wy).sum()
            s1 = (win * wx * wx).sum() - mu1 * mu1
            s2 = (win * wy * wy).sum() - mu2 * mu2
            s12 = (win * wx * wy).sum() - mu1 * mu2
            values.append(
                ((2 * mu1 * mu2 + c1) * (2 * s12 + c2))
                / ((mu1 * mu1 + mu2 * mu2 + c1) * (s1 + s2 + c2))
            )
    return sum(values) / len(values)
