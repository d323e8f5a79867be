import numpy as np
import pytest
import requests

import vafm
from vafm import (
    BONDI_RADII,
    MalformedRecordError,
    NetworkError,
    NoAtomsError,
    NotFoundError,
    RadiusTable,
    fetch_alphafold,
    is_valid_accession,
    parse_pdb,
    vdw_radius,
    write_pdb,
)
from vafm.structure import CACHE_DIR_ENV


class TestParsePdb:
    def test_fixed_columns(self, tiny_pdb_text):
        model = parse_pdb(tiny_pdb_text, source_id="tiny")
        assert len(model) == 4
        first = model.atoms[0]
        assert first.serial == 1
        assert first.name == "N"
        assert first.element == "N"
        assert (first.position == [10.0, 10.0, 10.0]).all()
        assert first.occupancy == 1.0
        assert first.chain_id == "A"
        assert first.residue_seq == 1

    def test_negative_coordinates_touch_column_boundaries(self):
        line = (
            "ATOM      1  CA  ALA A   1    -999.999-999.999-999.999  1.00  0.00"
            "           C"
        )
        model = parse_pdb(line + "\nEND\n")
        assert (model.atoms[0].position == [-999.999, -999.999, -999.999]).all()

    def test_altloc_keeps_blank_and_a_only(self):
        text = (
            "ATOM      1  CA AALA A   1       1.000   0.000   0.000  0.50  0.00           C\n"
            "ATOM      2  CA BALA A   1       2.000   0.000   0.000  0.50  0.00           C\n"
            "ATOM      3  CB  ALA A   1       3.000   0.000   0.000  1.00  0.00           C\n"
        )
        model = parse_pdb(text)
        assert [a.serial for a in model.atoms] == [1, 3]

    def test_first_model_only(self):
        text = (
            "MODEL        1\n"
            "ATOM      1  CA  ALA A   1       1.000   0.000   0.000  1.00  0.00           C\n"
            "ENDMDL\n"
            "MODEL        2\n"
            "ATOM      2  CA  ALA A   1       9.000   9.000   9.000  1.00  0.00           C\n"
            "ENDMDL\n"
        )
        model = parse_pdb(text)
        assert len(model) == 1
        assert model.atoms[0].serial == 1

    def test_hetatm_included_by_default_waters_excluded(self):
        text = (
            "ATOM      1  CA  ALA A   1       1.000   0.000   0.000  1.00  0.00           C\n"
            "HETATM    2 ZN    ZN A 101       2.000   0.000   0.000  1.00  0.00          ZN\n"
            "HETATM    3  O   HOH A 201       3.000   0.000   0.000  1.00  0.00           O\n"
        )
        model = parse_pdb(text)
        assert [a.serial for a in model.atoms] == [1, 2]
        with_waters = parse_pdb(text, include_waters=True)
        assert [a.serial for a in with_waters.atoms] == [1, 2, 3]
        no_het = parse_pdb(text, include_hetatm=False)
        assert [a.serial for a in no_het.atoms] == [1]

    def test_element_falls_back_to_atom_name(self):
        text = "ATOM      1  CA  ALA A   1       1.000   0.000   0.000  1.00  0.00\n"
        model = parse_pdb(text)
        assert model.atoms[0].element == "C"

    def test_malformed_coordinates_carry_line_number(self):
        text = (
            "ATOM      1  CA  ALA A   1       1.000   0.000   0.000  1.00  0.00           C\n"
            "ATOM      2  CB  ALA A   1       x.000   0.000   0.000  1.00  0.00           C\n"
        )
        with pytest.raises(MalformedRecordError) as err:
            parse_pdb(text)
        assert err.value.line_no == 2

    def test_occupancy_clamped(self):
        text = "ATOM      1  CA  ALA A   1       1.000   0.000   0.000  9.99  0.00           C\n"
        assert parse_pdb(text).atoms[0].occupancy == 1.0

    def test_no_atoms_raises(self):
        with pytest.raises(NoAtomsError):
            parse_pdb("HEADER    NOTHING\nEND\n")


class TestWritePdb:
    def test_round_trip_preserves_retained_fields(self, tiny_pdb_text):
        model = parse_pdb(tiny_pdb_text, source_id="tiny")
        again = parse_pdb(write_pdb(model), source_id="tiny")
        assert len(again) == len(model)
        for a, b in zip(model.atoms, again.atoms):
            assert a.serial == b.serial
            assert a.name == b.name
            assert a.element == b.element
            assert (a.position == b.position).all()
            assert a.occupancy == b.occupancy
            assert a.chain_id == b.chain_id
            assert a.residue_seq == b.residue_seq

    def test_second_write_is_stable(self, tiny_pdb_text):
        model = parse_pdb(tiny_pdb_text)
        text1 = write_pdb(model)
        text2 = write_pdb(parse_pdb(text1))
        assert text1 == text2


class TestRadii:
    def test_bondi_values(self):
        assert BONDI_RADII["C"] == 1.70
        assert BONDI_RADII["N"] == 1.55
        assert BONDI_RADII["O"] == 1.52
        assert BONDI_RADII["H"] == 1.20
        assert BONDI_RADII["S"] == 1.80

    def test_unknown_element_gets_default(self, caplog):
        table = RadiusTable.bondi()
        with caplog.at_level("WARNING", logger="vafm"):
            r = vdw_radius("XX", table)
        assert r == table.default
        assert any("XX" in rec.message for rec in caplog.records)

    def test_case_insensitive_lookup(self):
        table = RadiusTable.bondi()
        assert vdw_radius("c", table) == 1.70
        assert vdw_radius("Zn", table) == vdw_radius("ZN", table)

    def test_table_must_cover_organic_elements(self):
        with pytest.raises(ValueError):
            RadiusTable(radii={"C": 1.7}, default=1.7)


class TestAccession:
    @pytest.mark.parametrize("acc", ["P12345", "Q8N726", "A0A024R161", "p12345"])
    def test_valid(self, acc):
        assert is_valid_accession(acc)

    @pytest.mark.parametrize("acc", ["", "P1234", "P123456", "A0A024R16", "P12-45", "P12345678901"])
    def test_invalid(self, acc):
        assert not is_valid_accession(acc)


class _FakeResponse:
    def __init__(self, status_code, text=""):
        self.status_code = status_code
        self.text = text


class TestFetchAlphafold:
    def test_builds_pinned_v4_url(self, monkeypatch, tiny_pdb_text):
        seen = {}

        def fake_get(url, timeout):
            seen["url"] = url
            return _FakeResponse(200, tiny_pdb_text)

        monkeypatch.setattr(requests, "get", fake_get)
        text = fetch_alphafold("p12345")
        assert text == tiny_pdb_text
        assert seen["url"] == "https://alphafold.ebi.ac.uk/files/AF-P12345-F1-model_v4.pdb"

    def test_cache_round_trip(self, monkeypatch, tmp_path, tiny_pdb_text):
        calls = []

        def fake_get(url, timeout):
            calls.append(url)
            return _FakeResponse(200, tiny_pdb_text)

        monkeypatch.setattr(requests, "get", fake_get)
        first = fetch_alphafold("P12345", cache_dir=tmp_path)
        assert (tmp_path / "AF-P12345-F1-model_v4.pdb").is_file()

        def boom(url, timeout):  # cache hit must not touch the network
            raise AssertionError("network touched despite cache")

        monkeypatch.setattr(requests, "get", boom)
        second = fetch_alphafold("P12345", cache_dir=tmp_path)
        assert first == second == tiny_pdb_text
        assert len(calls) == 1

    def test_cache_dir_from_environment(self, monkeypatch, tmp_path, tiny_pdb_text):
        monkeypatch.setenv(CACHE_DIR_ENV, str(tmp_path))
        monkeypatch.setattr(requests, "get", lambda url, timeout: _FakeResponse(200, tiny_pdb_text))
        fetch_alphafold("P12345")
        assert (tmp_path / "AF-P12345-F1-model_v4.pdb").read_text() == tiny_pdb_text

    def test_404_raises_not_found(self, monkeypatch):
        monkeypatch.setattr(requests, "get", lambda url, timeout: _FakeResponse(404))
        with pytest.raises(NotFoundError):
            fetch_alphafold("P99999")

    def test_transport_error_raises_network_error(self, monkeypatch):
        def fake_get(url, timeout):
            raise requests.ConnectionError("no route")

        monkeypatch.setattr(requests, "get", fake_get)
        with pytest.raises(NetworkError):
            fetch_alphafold("P12345")

    def test_http_500_raises_network_error(self, monkeypatch):
        monkeypatch.setattr(requests, "get", lambda url, timeout: _FakeResponse(500))
        with pytest.raises(NetworkError):
            fetch_alphafold("P12345")

    def test_invalid_accession_rejected_before_network(self):
        with pytest.raises(ValueError):
            fetch_alphafold("not-an-accession")

    def test_model_version_override(self, monkeypatch, tiny_pdb_text):
        seen = {}

        def fake_get(url, timeout):
            seen["url"] = url
            return _FakeResponse(200, tiny_pdb_text)

        monkeypatch.setattr(requests, "get", fake_get)
        fetch_alphafold("P12345", model_version="v3")
        assert seen["url"].endswith("model_v3.pdb")


def test_model_bbox(tiny_pdb_text):
    model = parse_pdb(tiny_pdb_text)
    assert (model.bbox_min == [10.0, 9.0, 9.5]).all()
    assert (model.bbox_max == [13.0, 12.0, 12.5]).all()


def test_public_exports_exist():
    for name in vafm.__all__:
        assert hasattr(vafm, name), name
