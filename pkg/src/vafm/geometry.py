"""Triangle meshes, rigid rotations, and deterministic orientation sampling.

The random number generator here is self-contained (splitmix64) rather than
numpy's: manifests must be reproducible bit-for-bit across platforms and
languages, which rules out any generator whose stream is an implementation
detail of the host library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRangeError, NoGeometryError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15  # golden-ratio increment of splitmix64


def _mix64(z: int) -> int:
    """splitmix64 finalization mix (Steele/Lea/Flood constants)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Seed of child stream `index`.

    Pure function of (seed, index): deriving stream i never depends on how
    much of the parent stream has been consumed, so views can be generated
    in any order or in parallel with identical results.
    """
    if index < 0:
        raise ValueError("stream index must be >= 0")
    return _mix64((seed & _MASK64) ^ _mix64(((index + 1) * _GAMMA) & _MASK64))


class Rng:
    """Deterministic 64-bit stream (splitmix64).

    Same seed, same stream, on every platform: the state update and output
    mix use only fixed-width integer arithmetic.  Floats are built from the
    53 high bits of each output word, giving uniform values in [0, 1).

    A stream has a single consumer; for parallel work derive child streams
    with :meth:`child`.
    """

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._state = self.seed

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix64(self._state)

    def next_float(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def child(self, index: int) -> Rng:
        return Rng(derive_seed(self.seed, index))

    def __repr__(self) -> str:  # pragma: no cover
        return f"Rng(seed={self.seed:#018x})"


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion (w, x, y, z), Hamilton convention, active rotation."""

    w: float
    x: float
    y: float
    z: float

    _NORM_TOL = 1e-9

    def __post_init__(self):
        n = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if abs(n - 1.0) > self._NORM_TOL:
            raise ValueError(f"quaternion norm {n} deviates from 1 by more than {self._NORM_TOL}")

    @classmethod
    def identity(cls) -> Rotation:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_components(cls, w: float, x: float, y: float, z: float) -> Rotation:
        """Build from possibly unnormalized components (rescales to unit norm)."""
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n == 0.0:
            raise ValueError("zero quaternion has no direction")
        return cls(w / n, x / n, y / n, z / n)

    @classmethod
    def about_z(cls, angle_rad: float) -> Rotation:
        half = 0.5 * angle_rad
        return cls(math.cos(half), 0.0, 0.0, math.sin(half))

    @classmethod
    def about_axis(cls, axis, angle_rad: float) -> Rotation:
        a = np.asarray(axis, dtype=np.float64)
        a = a / np.linalg.norm(a)
        half = 0.5 * angle_rad
        s = math.sin(half)
        return cls(math.cos(half), s * a[0], s * a[1], s * a[2])

    def compose(self, other: Rotation) -> Rotation:
        """Quaternion product self*other: apply `other` first, then `self`."""
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Rotation(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def inverse(self) -> Rotation:
        return Rotation(self.w, -self.x, -self.y, -self.z)

    def matrix(self) -> np.ndarray:
        """3x3 rotation matrix; identity quaternion yields the exact identity."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
                [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
                [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
            ],
            dtype=np.float64,
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)


def sample_rotation(rng: Rng) -> Rotation:
    """Draw a rotation uniformly on SO(3) from three uniform variates.

    Subgroup-algorithm construction (Shoemake): with u1,u2,u3 ~ U[0,1),

        r1 = sqrt(1-u1), r2 = sqrt(u1), t1 = 2*pi*u2, t2 = 2*pi*u3
        q  = (cos(t2)*r2, sin(t1)*r1, cos(t1)*r1, sin(t2)*r2)   # (w,x,y,z)
    """
    u1 = rng.next_float()
    u2 = rng.next_float()
    u3 = rng.next_float()
    r1 = math.sqrt(1.0 - u1)
    r2 = math.sqrt(u1)
    t1 = 2.0 * math.pi * u2
    t2 = 2.0 * math.pi * u3
    return Rotation(math.cos(t2) * r2, math.sin(t1) * r1, math.cos(t1) * r1, math.sin(t2) * r2)


def rotate_points(points, rotation: Rotation, center) -> np.ndarray:
    """Map each point p to center + R @ (p - center)."""
    pts = np.asarray(points, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    return (pts - c) @ rotation.matrix().T + c


@dataclass(frozen=True)
class TriangleMesh:
    """Triangle surface mesh: vertices in Angstrom, triangles as index triples."""

    vertices: np.ndarray   # (V, 3) float64
    triangles: np.ndarray  # (T, 3) int64

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        t = np.asarray(self.triangles, dtype=np.int64)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if t.shape[0] < 1:
            raise NoGeometryError("mesh has no triangles")
        if not np.all(np.isfinite(v)):
            raise ValueError("mesh has non-finite vertex coordinates")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise IndexOutOfRangeError("triangle references a missing vertex")

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def parse_obj(text: str) -> TriangleMesh:
    """Parse a Wavefront OBJ string (``v`` and ``f`` records only).

    Faces with more than three vertices are fan-triangulated around the
    first vertex.  Negative indices resolve relative to the vertices defined
    so far.  Normals, texture coordinates, groups and materials are ignored,
    as are blank lines and ``#`` comments; CRLF input parses identically.
    """
    vertices: list[list[float]] = []
    triangles: list[tuple[int, int, int]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        tag = fields[0]
        if tag == "v":
            if len(fields) < 4:
                raise NoGeometryError(f"line {line_no}: vertex record with <3 coordinates")
            vertices.append([float(fields[1]), float(fields[2]), float(fields[3])])
        elif tag == "f":
            idx = []
            for token in fields[1:]:
                # "i", "i/t", "i//n", "i/t/n" all start with the vertex index
                i = int(token.split("/")[0])
                if i < 0:
                    i = len(vertices) + i  # relative to vertices defined so far
                else:
                    i = i - 1
                if i < 0 or i >= len(vertices):
                    raise IndexOutOfRangeError(
                        f"line {line_no}: face references vertex {token} "
                        f"but only {len(vertices)} vertices are defined"
                    )
                idx.append(i)
            if len(idx) < 3:
                continue
            for k in range(1, len(idx) - 1):  # fan rule
                triangles.append((idx[0], idx[k], idx[k + 1]))

    if not triangles:
        raise NoGeometryError("OBJ input defines no faces")
    return TriangleMesh(np.array(vertices, dtype=np.float64), np.array(triangles, dtype=np.int64))
