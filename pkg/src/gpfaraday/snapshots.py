"""On-disk formats: GPF1 binary field snapshots (with JSON sidecars), GPD1
spectral-decomposition blocks, and the run manifest.

GPF1 layout (all little-endian):
    0   4s   magic  b"GPF1"
    4   u16  format version (1)
    6   u8   endianness flag (1 = little-endian payload)
    7   u8   dims (1..3)
    8   3u32 points per axis (unused axes 1)
    20  3f64 spacings per axis, um (unused axes 0)
    44  f64  time, ms
    52  payload: psi1 then psi2, row-major axis order (x, y, z),
        each point an interleaved (re, im) float64 pair

GPD1 layout:
    0   4s   magic b"GPD1"
    4   u16  version (1)
    6   u8   mode (1 = fourier1d, 2 = bessel2d)
    7   u8   reserved (0)
    8   u32  n_l
    12  u32  n_k
    16  f64[n_k] k grid, f64[n_l] angular orders, complex128[n_l * n_k] coeffs
"""

import hashlib
import json
import os
import struct
import sys

import numpy as np

from .grids import Grid
from .model import BinaryField

_HEADER = struct.Struct("<4sHBB3I3dd")
MAGIC = b"GPF1"
VERSION = 1


class FormatError(IOError):
    pass


def _le(arr):
    """View/convert an array to little-endian bytes."""
    if sys.byteorder == "little":
        return np.ascontiguousarray(arr).tobytes()
    return np.ascontiguousarray(arr).byteswap().tobytes()


def write_snapshot(path, fld, meta=None):
    """Write a field snapshot; a JSON sidecar carries meta when given."""
    points = list(fld.grid.points) + [1] * (3 - fld.grid.dims)
    spacings = list(fld.grid.spacings) + [0.0] * (3 - fld.grid.dims)
    header = _HEADER.pack(MAGIC, VERSION, 1, fld.grid.dims, *points, *spacings, fld.time)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(_le(fld.psi1))
        fh.write(_le(fld.psi2))
    if meta is not None:
        with open(str(path) + ".json", "w") as fh:
            json.dump(meta, fh, indent=1, sort_keys=True)


def read_snapshot(path):
    """Read a snapshot back into a BinaryField (+ sidecar meta dict or None)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise FormatError(f"{path}: truncated header ({len(head)} bytes)")
        magic, version, endian, dims, p0, p1, p2, s0, s1, s2, time = _HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported format version {version}")
        if endian != 1:
            raise FormatError(f"{path}: unsupported endianness flag {endian}")
        if dims not in (1, 2, 3):
            raise FormatError(f"{path}: bad dims {dims}")
        points = (p0, p1, p2)[:dims]
        spacings = (s0, s1, s2)[:dims]
        npts = int(np.prod(points))
        payload = fh.read()
    expected = 2 * npts * 16
    if len(payload) != expected:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    raw = np.frombuffer(payload, dtype="<c16")
    psi1 = raw[:npts].reshape(points).astype(np.complex128)
    psi2 = raw[npts:].reshape(points).astype(np.complex128)
    extents = tuple(0.5 * n * s for n, s in zip(points, spacings))
    grid = Grid(points=points, extents=extents)
    fld = BinaryField(grid, psi1, psi2, time=time)
    meta = None
    sidecar = str(path) + ".json"
    if os.path.exists(sidecar):
        with open(sidecar) as fh:
            meta = json.load(fh)
    return fld, meta


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Decomposition blocks

_GPD_HEADER = struct.Struct("<4sHBBII")
GPD_MAGIC = b"GPD1"
_GPD_MODES = {"fourier1d": 1, "bessel2d": 2}


def write_decomposition(path, decomp):
    mode = _GPD_MODES.get(decomp.mode)
    if mode is None:
        raise FormatError(f"unknown decomposition mode {decomp.mode!r}")
    n_l, n_k = decomp.coeffs.shape
    with open(path, "wb") as fh:
        fh.write(_GPD_HEADER.pack(GPD_MAGIC, 1, mode, 0, n_l, n_k))
        fh.write(_le(np.asarray(decomp.k, dtype=np.float64)))
        fh.write(_le(np.asarray(decomp.l, dtype=np.float64)))
        fh.write(_le(np.asarray(decomp.coeffs, dtype=np.complex128)))


def read_decomposition(path):
    from .analysis import SpectralDecomposition

    with open(path, "rb") as fh:
        head = fh.read(_GPD_HEADER.size)
        if len(head) < _GPD_HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, mode, _, n_l, n_k = _GPD_HEADER.unpack(head)
        if magic != GPD_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != 1:
            raise FormatError(f"{path}: unsupported version {version}")
        names = {v: k for k, v in _GPD_MODES.items()}
        if mode not in names:
            raise FormatError(f"{path}: unknown mode {mode}")
        body = fh.read()
    expected = 8 * n_k + 8 * n_l + 16 * n_l * n_k
    if len(body) != expected:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    k = np.frombuffer(body[: 8 * n_k], dtype="<f8")
    l = np.frombuffer(body[8 * n_k: 8 * (n_k + n_l)], dtype="<f8")
    coeffs = np.frombuffer(body[8 * (n_k + n_l):], dtype="<c16").reshape(n_l, n_k)
    return SpectralDecomposition(mode=names[mode], l=l.astype(int),
                                 k=k.copy(), coeffs=coeffs.copy())


# ---------------------------------------------------------------------------
# Run manifest


class ManifestError(IOError):
    pass


class RunManifest:
    """Ordered snapshot index with content hashes and completion status."""

    def __init__(self, run_dir, config_hash, status="running", snapshots=None,
                 series_file="series.tsv"):
        self.run_dir = str(run_dir)
        self.config_hash = config_hash
        self.status = status
        self.snapshots = snapshots or []     # dicts: index, step, time, file, sha256
        self.series_file = series_file

    @property
    def path(self):
        return os.path.join(self.run_dir, "manifest.json")

    def to_dict(self):
        return {"schema": 1, "config_hash": self.config_hash, "status": self.status,
                "series_file": self.series_file, "snapshots": self.snapshots}

    def save(self):
        tmp = self.path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
        os.replace(tmp, self.path)

    @classmethod
    def load(cls, run_dir):
        path = os.path.join(str(run_dir), "manifest.json")
        with open(path) as fh:
            raw = json.load(fh)
        if raw.get("schema") != 1:
            raise ManifestError(f"{path}: unsupported manifest schema {raw.get('schema')}")
        return cls(run_dir, raw["config_hash"], status=raw["status"],
                   snapshots=raw["snapshots"], series_file=raw.get("series_file",
                                                                   "series.tsv"))

    def add_snapshot(self, step, time, filename):
        """Record a fully-written snapshot file (hash taken now) and persist."""
        digest = file_sha256(os.path.join(self.run_dir, filename))
        self.snapshots.append({"index": len(self.snapshots), "step": step,
                               "time": time, "file": filename, "sha256": digest})
        self.save()

    def verify(self):
        """Check that every listed snapshot exists and hashes match; returns a
        list of (filename, problem) tuples."""
        problems = []
        for entry in self.snapshots:
            path = os.path.join(self.run_dir, entry["file"])
            if not os.path.exists(path):
                problems.append((entry["file"], "missing"))
            elif file_sha256(path) != entry["sha256"]:
                problems.append((entry["file"], "hash mismatch"))
        return problems
