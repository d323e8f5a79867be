"""Protein structure ingestion: PDB parsing and AlphaFold DB retrieval.

Only the fixed-column subset of PDB 3.3 needed for topography is read:
serials, atom names, altLoc, chain, residue number, coordinates, occupancy
and the element column.  Multi-model files contribute their first MODEL
only.  Waters (HOH) are dropped by default since they are crystallographic
artifacts, not imaged surface; HETATM ligands are kept because they do sit
on top of the molecule.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedRecordError, NetworkError, NoAtomsError, NotFoundError

log = logging.getLogger("vafm")

ALPHAFOLD_URL_TEMPLATE = "https://alphafold.ebi.ac.uk/files/AF-{accession}-F1-model_{version}.pdb"
ALPHAFOLD_MODEL_VERSION = "v4"

#: Environment variable naming an on-disk cache directory for fetched files.
CACHE_DIR_ENV = "VAFM_CACHE_DIR"

_ACCESSION_RE = re.compile(r"^[A-Z0-9]{6}$|^[A-Z0-9]{10}$")


@dataclass(frozen=True)
class Atom:
    serial: int
    name: str
    element: str
    position: np.ndarray  # (3,) float64, Angstrom
    occupancy: float = 1.0
    alt_loc: str = ""
    chain_id: str = ""
    residue_seq: int = 0

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64)
        object.__setattr__(self, "position", pos)
        if pos.shape != (3,) or not np.all(np.isfinite(pos)):
            raise ValueError(f"atom {self.serial}: position must be a finite 3-vector")
        if not (0.0 <= self.occupancy <= 1.0):
            raise ValueError(f"atom {self.serial}: occupancy {self.occupancy} outside [0, 1]")
        if not self.element:
            raise ValueError(f"atom {self.serial}: empty element after resolution")


@dataclass(frozen=True)
class MolecularModel:
    """Parsed atoms plus the axis-aligned bounding box of their centers."""

    atoms: tuple[Atom, ...]
    source_id: str
    bbox_min: np.ndarray = field(init=False)
    bbox_max: np.ndarray = field(init=False)

    def __post_init__(self):
        if len(self.atoms) < 1:
            raise NoAtomsError(f"{self.source_id}: model with zero atoms")
        pos = self.positions()
        object.__setattr__(self, "bbox_min", pos.min(axis=0))
        object.__setattr__(self, "bbox_max", pos.max(axis=0))

    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.atoms)


# Bondi (1964) van der Waals radii in Angstrom, with the common extensions
# used by molecular viewers.  Keys are uppercase element symbols.
BONDI_RADII: dict[str, float] = {
    "H": 1.20, "HE": 1.40,
    "C": 1.70, "N": 1.55, "O": 1.52, "F": 1.47, "NE": 1.54,
    "SI": 2.10, "P": 1.80, "S": 1.80, "CL": 1.75, "AR": 1.88,
    "AS": 1.85, "SE": 1.90, "BR": 1.85, "KR": 2.02,
    "TE": 2.06, "I": 1.98, "XE": 2.16,
    "NA": 2.27, "MG": 1.73, "K": 2.75, "CA": 2.31,
    "NI": 1.63, "CU": 1.40, "ZN": 1.39, "PD": 1.63, "AG": 1.72,
    "PT": 1.75, "AU": 1.66, "HG": 1.55, "CD": 1.58,
    "LI": 1.82, "GA": 1.87, "IN": 1.93, "SN": 2.17, "TL": 1.96, "PB": 2.02,
    "U": 1.86,
}

DEFAULT_RADIUS = 1.70  # carbon-like fallback for exotic elements


@dataclass(frozen=True)
class RadiusTable:
    """Element symbol -> van der Waals radius (Angstrom), with a default."""

    radii: dict[str, float]
    default: float = DEFAULT_RADIUS

    def __post_init__(self):
        for sym in ("H", "C", "N", "O", "S", "P"):
            if sym not in self.radii:
                raise ValueError(f"radius table must cover {sym}")
        if self.default <= 0 or any(r <= 0 for r in self.radii.values()):
            raise ValueError("all radii must be positive")

    @classmethod
    def bondi(cls) -> RadiusTable:
        return cls(radii=dict(BONDI_RADII))


def vdw_radius(element: str, table: RadiusTable) -> float:
    """Look up an element's vdW radius; unknown symbols fall back to the default."""
    r = table.radii.get(element.upper())
    if r is None:
        log.warning("unknown element %r, using default radius %.2f A", element, table.default)
        return table.default
    return r


def _resolve_element(element_col: str, atom_name: str) -> str:
    if element_col:
        return element_col.upper()
    for ch in atom_name:
        if ch.isalpha():
            return ch.upper()
    return ""


def parse_pdb(
    text: str,
    source_id: str = "<string>",
    include_hetatm: bool = True,
    include_waters: bool = False,
) -> MolecularModel:
    """Parse PDB text into a MolecularModel.

    Fixed columns per PDB 3.3: serial 7-11, name 13-16, altLoc 17,
    resName 18-20, chainID 22, resSeq 23-26, x/y/z 31-38/39-46/47-54,
    occupancy 55-60, element 77-78.  Records with altLoc other than blank
    or 'A' are skipped.  Only the first MODEL is read.

    Raises NoAtomsError when nothing parses, MalformedRecordError (with the
    line number) when a coordinate field is not numeric.
    """
    atoms: list[Atom] = []
    in_first_model = True
    saw_model = False

    for line_no, line in enumerate(text.splitlines(), start=1):
        record = line[:6].strip()
        if record == "MODEL":
            if saw_model:
                break  # a second MODEL record; first model already consumed
            saw_model = True
            continue
        if record == "ENDMDL":
            in_first_model = False
            continue
        if not in_first_model:
            continue
        if record not in ("ATOM", "HETATM"):
            continue
        if record == "HETATM" and not include_hetatm:
            continue

        alt_loc = line[16:17].strip()
        if alt_loc not in ("", "A"):
            continue
        res_name = line[17:20].strip()
        if res_name == "HOH" and not include_waters:
            continue

        try:
            x = float(line[30:38])
            y = float(line[38:46])
            z = float(line[46:54])
        except ValueError:
            raise MalformedRecordError(line_no, f"unparseable coordinates in {line[30:54]!r}")

        try:
            serial = int(line[6:11])
        except ValueError:
            serial = len(atoms) + 1
        name = line[12:16].strip()
        try:
            occupancy = float(line[54:60])
        except ValueError:
            occupancy = 1.0
        occupancy = min(max(occupancy, 0.0), 1.0)
        chain_id = line[21:22].strip()
        try:
            residue_seq = int(line[22:26])
        except ValueError:
            residue_seq = 0

        element = _resolve_element(line[76:78].strip(), name)
        if not element:
            continue

        atoms.append(
            Atom(
                serial=serial,
                name=name,
                element=element,
                position=np.array([x, y, z]),
                occupancy=occupancy,
                alt_loc=alt_loc,
                chain_id=chain_id,
                residue_seq=residue_seq,
            )
        )

    if not atoms:
        raise NoAtomsError(f"{source_id}: no parseable ATOM/HETATM records")
    return MolecularModel(atoms=tuple(atoms), source_id=source_id)


def write_pdb(model: MolecularModel) -> str:
    """Serialize the retained fields back to fixed-column ATOM records.

    Canonical inverse of :func:`parse_pdb` on the retained field subset:
    parse(write(parse(text))) reproduces the same atoms.
    """
    lines = []
    for a in model.atoms:
        name = a.name if len(a.name) >= 4 else f" {a.name:<3}"
        lines.append(
            f"ATOM  {a.serial:>5} {name:<4}{a.alt_loc or ' ':1}UNK {a.chain_id or ' ':1}"
            f"{a.residue_seq:>4}    "
            f"{a.position[0]:8.3f}{a.position[1]:8.3f}{a.position[2]:8.3f}"
            f"{a.occupancy:6.2f}{0.0:6.2f}          {a.element.upper():>2}"
        )
    lines.append("END")
    return "\n".join(lines) + "\n"


def is_valid_accession(accession: str) -> bool:
    return bool(_ACCESSION_RE.match(accession.upper()))


def fetch_alphafold(
    accession: str,
    cache_dir: str | os.PathLike | None = None,
    url_template: str = ALPHAFOLD_URL_TEMPLATE,
    model_version: str = ALPHAFOLD_MODEL_VERSION,
    timeout: float = 60.0,
) -> str:
    """Fetch the predicted structure for a UniProt accession, as PDB text.

    The URL is pinned to model v4 for reproducibility; override
    ``model_version`` or ``url_template`` to point elsewhere.  When a cache
    directory is given (argument or the VAFM_CACHE_DIR environment
    variable), a previously fetched file is reused without touching the
    network, and fresh downloads are stored there.

    This is the only operation in the package that performs network I/O.
    """
    accession = accession.upper()
    if not is_valid_accession(accession):
        raise ValueError(f"{accession!r} is not a UniProt accession (6 or 10 alphanumerics)")

    if cache_dir is None:
        cache_dir = os.environ.get(CACHE_DIR_ENV) or None
    cache_path = None
    if cache_dir is not None:
        cache_path = os.path.join(cache_dir, f"AF-{accession}-F1-model_{model_version}.pdb")
        if os.path.isfile(cache_path):
            with open(cache_path, "r", encoding="utf-8") as fh:
                return fh.read()

    import requests

    url = url_template.format(accession=accession, version=model_version)
    try:
        resp = requests.get(url, timeout=timeout)
    except requests.RequestException as exc:
        raise NetworkError(f"fetching {url}: {exc}") from exc
    if resp.status_code == 404:
        raise NotFoundError(f"accession {accession} not in AlphaFold DB ({url})")
    if resp.status_code != 200:
        raise NetworkError(f"HTTP {resp.status_code} fetching {url}")

    text = resp.text
    if cache_path is not None:
        os.makedirs(cache_dir, exist_ok=True)
        tmp = cache_path + ".part"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, cache_path)
    return text
