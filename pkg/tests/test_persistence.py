"""Snapshot/decomposition binary formats and the run manifest."""

import json
import os

import numpy as np
import pytest

import gpfaraday as gp
from gpfaraday.snapshots import file_sha256


def random_field(points, extents, seed=0, time=3.25):
    rng = np.random.default_rng(seed)
    grid = gp.Grid(points=points, extents=extents)
    psi1 = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    psi2 = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return gp.BinaryField(grid, psi1, psi2, time=time)


class TestSnapshotFormat:
    @pytest.mark.parametrize("points,extents", [
        ((64,), (8.0,)),
        ((32, 16), (4.0, 2.0)),
        ((8, 8, 16), (1.0, 1.0, 2.0)),
    ])
    def test_round_trip_bit_exact(self, tmp_path, points, extents):
        fld = random_field(points, extents)
        path = tmp_path / "f.gpf"
        gp.write_snapshot(path, fld, meta={"step": 7})
        back, meta = gp.read_snapshot(path)
        assert np.array_equal(back.psi1, fld.psi1)
        assert np.array_equal(back.psi2, fld.psi2)
        assert back.time == fld.time
        assert back.grid.points == fld.grid.points
        assert back.grid.spacings == fld.grid.spacings
        assert meta == {"step": 7}

    def test_write_read_write_identical_bytes(self, tmp_path):
        fld = random_field((32, 16), (4.0, 2.0))
        p1, p2 = tmp_path / "a.gpf", tmp_path / "b.gpf"
        gp.write_snapshot(p1, fld)
        back, _ = gp.read_snapshot(p1)
        gp.write_snapshot(p2, back)
        assert p1.read_bytes() == p2.read_bytes()

    def test_payload_length_in_header_contract(self, tmp_path):
        fld = random_field((64,), (8.0,))
        path = tmp_path / "f.gpf"
        gp.write_snapshot(path, fld)
        assert os.path.getsize(path) == 52 + 2 * 64 * 16

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "f.gpf"
        gp.write_snapshot(path, random_field((64,), (8.0,)))
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(bytes(blob))
        with pytest.raises(gp.FormatError, match="magic"):
            gp.read_snapshot(path)

    def test_bad_version_rejected(self, tmp_path):
        path = tmp_path / "f.gpf"
        gp.write_snapshot(path, random_field((64,), (8.0,)))
        blob = bytearray(path.read_bytes())
        blob[4:6] = (99).to_bytes(2, "little")
        path.write_bytes(bytes(blob))
        with pytest.raises(gp.FormatError, match="version"):
            gp.read_snapshot(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "f.gpf"
        gp.write_snapshot(path, random_field((64,), (8.0,)))
        blob = path.read_bytes()
        path.write_bytes(blob[:-16])
        with pytest.raises(gp.FormatError, match="payload"):
            gp.read_snapshot(path)

    def test_truncated_header_rejected(self, tmp_path):
        path = tmp_path / "f.gpf"
        path.write_bytes(b"GPF1\x01")
        with pytest.raises(gp.FormatError, match="header"):
            gp.read_snapshot(path)


class TestDecompositionFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        dec = gp.SpectralDecomposition(
            mode="bessel2d", l=np.arange(11), k=np.linspace(0, 1.5, 64),
            coeffs=rng.standard_normal((11, 64)) + 1j * rng.standard_normal((11, 64)))
        path = tmp_path / "d.gpd"
        gp.write_decomposition(path, dec)
        back = gp.read_decomposition(path)
        assert back.mode == "bessel2d"
        assert np.array_equal(back.k, dec.k)
        assert np.array_equal(back.l, dec.l)
        assert np.array_equal(back.coeffs, dec.coeffs)

    def test_corrupt_rejected(self, tmp_path):
        path = tmp_path / "d.gpd"
        path.write_bytes(b"JUNKJUNKJUNKJUNKJUNK")
        with pytest.raises(gp.FormatError):
            gp.read_decomposition(path)


class TestManifest:
    def test_add_and_verify(self, tmp_path):
        fld = random_field((64,), (8.0,))
        man = gp.RunManifest(tmp_path, config_hash="abc123")
        gp.write_snapshot(tmp_path / "snap_0.gpf", fld)
        man.add_snapshot(0, 0.0, "snap_0.gpf")
        man.save()
        loaded = gp.RunManifest.load(tmp_path)
        assert loaded.config_hash == "abc123"
        assert loaded.snapshots[0]["sha256"] == file_sha256(tmp_path / "snap_0.gpf")
        assert loaded.verify() == []

    def test_verify_detects_corruption_and_missing(self, tmp_path):
        fld = random_field((64,), (8.0,))
        man = gp.RunManifest(tmp_path, config_hash="abc")
        for i in range(3):
            name = f"snap_{i}.gpf"
            gp.write_snapshot(tmp_path / name, fld)
            man.add_snapshot(i, float(i), name)
        (tmp_path / "snap_1.gpf").write_bytes(b"corrupted")
        os.remove(tmp_path / "snap_2.gpf")
        problems = dict(gp.RunManifest.load(tmp_path).verify())
        assert problems == {"snap_1.gpf": "hash mismatch", "snap_2.gpf": "missing"}

    def test_unsupported_schema(self, tmp_path):
        with open(tmp_path / "manifest.json", "w") as fh:
            json.dump({"schema": 9}, fh)
        with pytest.raises(gp.ManifestError):
            gp.RunManifest.load(tmp_path)
