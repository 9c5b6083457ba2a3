"""Format-completeness of the readers against the documented layouts and
against files written by the simulator package."""

import json
import struct

import numpy as np
import pytest

import figurekit as fk


def build_snapshot_bytes(points, spacings, time, psi1, psi2):
    dims = len(points)
    pts = list(points) + [1] * (3 - dims)
    sps = list(spacings) + [0.0] * (3 - dims)
    header = struct.pack("<4sHBB3I3dd", b"GPF1", 1, 1, dims, *pts, *sps, time)
    return header + psi1.astype("<c16").tobytes() + psi2.astype("<c16").tobytes()


class TestSnapshotReader:
    def test_reads_hand_built_file(self, tmp_path):
        rng = np.random.default_rng(0)
        psi1 = rng.standard_normal((16, 8)) + 1j * rng.standard_normal((16, 8))
        psi2 = rng.standard_normal((16, 8)) + 1j * rng.standard_normal((16, 8))
        path = tmp_path / "s.gpf"
        path.write_bytes(build_snapshot_bytes((16, 8), (0.5, 0.25), 7.5,
                                              psi1, psi2))
        snap = fk.read_snapshot(path)
        assert np.array_equal(snap.psi1, psi1)
        assert np.array_equal(snap.psi2, psi2)
        assert snap.time == 7.5
        assert snap.spacings == (0.5, 0.25)
        assert snap.extents == (4.0, 1.0)

    def test_round_trips_simulator_written_file(self, tmp_path):
        gp = pytest.importorskip("gpfaraday")
        grid = gp.Grid(points=(32, 16), extents=(4.0, 2.0))
        rng = np.random.default_rng(3)
        fld = gp.BinaryField(grid,
                             rng.standard_normal(grid.shape)
                             + 1j * rng.standard_normal(grid.shape),
                             rng.standard_normal(grid.shape)
                             + 1j * rng.standard_normal(grid.shape), time=2.5)
        path = tmp_path / "s.gpf"
        gp.write_snapshot(path, fld, meta={"step": 3})
        snap = fk.read_snapshot(path)
        assert snap.psi1.tobytes() == fld.psi1.tobytes()   # bit-exact
        assert snap.psi2.tobytes() == fld.psi2.tobytes()
        assert snap.time == fld.time
        assert snap.meta == {"step": 3}
        np.testing.assert_allclose(snap.total_density,
                                   np.abs(fld.psi1) ** 2 + np.abs(fld.psi2) ** 2)

    def test_malformed_header_names_file(self, tmp_path):
        path = tmp_path / "bad.gpf"
        path.write_bytes(b"WAT!" + b"\x00" * 60)
        with pytest.raises(fk.FormatError) as err:
            fk.read_snapshot(path)
        assert "bad.gpf" in str(err.value)

    def test_truncated_payload(self, tmp_path):
        psi = np.zeros((8,), complex)
        blob = build_snapshot_bytes((8,), (1.0,), 0.0, psi, psi)
        path = tmp_path / "t.gpf"
        path.write_bytes(blob[:-8])
        with pytest.raises(fk.FormatError):
            fk.read_snapshot(path)


class TestDecompositionReader:
    def test_reads_simulator_block(self, tmp_path):
        gp = pytest.importorskip("gpfaraday")
        rng = np.random.default_rng(1)
        dec = gp.SpectralDecomposition(
            mode="bessel2d", l=np.arange(5), k=np.linspace(0, 1.5, 16),
            coeffs=rng.standard_normal((5, 16)) + 1j * rng.standard_normal((5, 16)))
        path = tmp_path / "d.gpd"
        gp.write_decomposition(path, dec)
        back = fk.read_decomposition(path)
        assert back.mode == "bessel2d"
        assert np.array_equal(back.coeffs, dec.coeffs)
        assert np.array_equal(back.k, dec.k)

    def test_rejects_junk(self, tmp_path):
        path = tmp_path / "d.gpd"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(fk.FormatError):
            fk.read_decomposition(path)


class TestTables:
    def test_tsv_reader(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("time\ta\tb\n0.0\t1.5\tok\n1.0\t2.5\t3\n")
        header, data = fk.read_tsv(path)
        assert header == ["time", "a", "b"]
        assert data.shape == (2, 3)
        assert data[0, 1] == 1.5
        assert np.isnan(data[0, 2])    # non-numeric cell

    def test_manifest_reader(self, tmp_path):
        with open(tmp_path / "manifest.json", "w") as fh:
            json.dump({"schema": 1, "config_hash": "x", "status": "complete",
                       "snapshots": [{"index": 0, "step": 0, "time": 0.0,
                                      "file": "snap.gpf", "sha256": "0"}]}, fh)
        manifest, entries = fk.load_run(tmp_path)
        assert manifest["status"] == "complete"
        assert entries[0]["file"] == "snap.gpf"

    def test_manifest_schema_check(self, tmp_path):
        with open(tmp_path / "manifest.json", "w") as fh:
            json.dump({"schema": 2}, fh)
        with pytest.raises(fk.FormatError):
            fk.read_manifest(tmp_path)
