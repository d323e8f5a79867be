"""Exception hierarchy shared across the package.

Every error the library raises deliberately derives from :class:`VafmError`,
so callers (and the CLI) can distinguish "this input is bad" from genuine
bugs.  OS-level failures (unwritable paths etc.) propagate as the builtin
``OSError``.
"""


class VafmError(Exception):
    """Base class for all errors raised by this package."""


# --- structure ingestion ---

class NoAtomsError(VafmError):
    """PDB text contained no parseable ATOM/HETATM records."""


class MalformedRecordError(VafmError):
    """An ATOM/HETATM record failed numeric parsing."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NetworkError(VafmError):
    """Transport-level failure while fetching a remote structure."""


class NotFoundError(VafmError):
    """Remote database does not contain the requested entry (HTTP 404)."""


# --- geometry ---

class NoGeometryError(VafmError):
    """OBJ input defined no faces."""


class IndexOutOfRangeError(VafmError):
    """OBJ face references a vertex that was never defined."""


# --- voxelization ---

class DegenerateExtentError(VafmError):
    """Input geometry has zero extent; no voxel scale can be defined."""


class NonWatertightError(VafmError):
    """Parity fill found scanlines with an odd crossing count."""


class TooLargeError(VafmError):
    """Raw occupancy does not fit inside the target grid resolution."""


# --- dataset / file formats ---

class SchemaError(VafmError):
    """A manifest or report file violates its declared schema."""


class MissingFileError(VafmError):
    """A manifest references a file that does not exist."""


# --- metrics ---

class DimensionMismatchError(VafmError):
    """Two images being compared have different dimensions."""


class TooSmallError(VafmError):
    """Image too small for the 11x11 SSIM window."""


class UnpairedFileError(VafmError):
    """A predicted image has no same-named ground-truth counterpart."""


class EmptyDirectoryError(VafmError):
    """A metrics input directory contains no PNG images."""
