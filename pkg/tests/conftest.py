import pytest

from helpers import helix_pdb


@pytest.fixture(scope="session")
def helix_pdb_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("fixtures") / "helix.pdb"
    path.write_text(helix_pdb())
    return path


TINY_PDB = """\
ATOM      1  N   ALA A   1      10.000  10.000  10.000  1.00  0.00           N
ATOM      2  CA  ALA A   1      13.000  10.500   9.500  1.00  0.00           C
ATOM      3  C   ALA A   1      11.500  12.000  11.000  1.00  0.00           C
ATOM      4  O   ALA A   1      12.000   9.000  12.500  1.00  0.00           O
END
"""


@pytest.fixture()
def tiny_pdb_text():
    return TINY_PDB


@pytest.fixture()
def tiny_pdb_path(tmp_path):
    path = tmp_path / "tiny.pdb"
    path.write_text(TINY_PDB)
    return path
