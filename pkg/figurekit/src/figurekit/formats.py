"""Readers for the simulator's on-disk formats. Implemented against the
documented layouts only; rendering never imports the simulator.

GPF1 snapshot (little-endian):
    0   4s   magic b"GPF1"
    4   u16  version (1)
    6   u8   endianness flag (1)
    7   u8   dims (1..3)
    8   3u32 points per axis (unused axes 1)
    20  3f64 spacings per axis, um (unused axes 0)
    44  f64  time, ms
    52  payload: psi1 then psi2, row-major (x, y, z), complex128 interleaved

GPD1 decomposition block:
    0   4s   magic b"GPD1"
    4   u16  version (1)
    6   u8   mode (1 fourier1d, 2 bessel2d)
    7   u8   reserved
    8   u32  n_l,  12  u32 n_k
    16  f64[n_k] k grid, f64[n_l] orders, complex128[n_l*n_k] coefficients
"""

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

_SNAP_HEADER = struct.Struct("<4sHBB3I3dd")
_GPD_HEADER = struct.Struct("<4sHBBII")


class FormatError(IOError):
    pass


@dataclass
class Snapshot:
    psi1: np.ndarray
    psi2: np.ndarray
    spacings: tuple      # um
    time: float          # ms
    meta: dict

    @property
    def dims(self):
        return self.psi1.ndim

    @property
    def extents(self):
        return tuple(0.5 * n * d for n, d in zip(self.psi1.shape, self.spacings))

    def axis(self, i):
        n, d = self.psi1.shape[i], self.spacings[i]
        return -self.extents[i] + d * np.arange(n)

    @property
    def total_density(self):
        return np.abs(self.psi1) ** 2 + np.abs(self.psi2) ** 2

    @property
    def spin_density(self):
        return np.abs(self.psi1) ** 2 - np.abs(self.psi2) ** 2


def read_snapshot(path):
    with open(path, "rb") as fh:
        head = fh.read(_SNAP_HEADER.size)
        if len(head) < _SNAP_HEADER.size:
            raise FormatError(f"{path}: truncated snapshot header")
        magic, version, endian, dims, p0, p1, p2, s0, s1, s2, time = \
            _SNAP_HEADER.unpack(head)
        if magic != b"GPF1":
            raise FormatError(f"{path}: not a GPF1 snapshot (magic {magic!r})")
        if version != 1 or endian != 1:
            raise FormatError(f"{path}: unsupported version/endian "
                              f"({version}/{endian})")
        if dims not in (1, 2, 3):
            raise FormatError(f"{path}: bad dims {dims}")
        points = (p0, p1, p2)[:dims]
        spacings = (s0, s1, s2)[:dims]
        payload = fh.read()
    npts = int(np.prod(points))
    if len(payload) != 2 * npts * 16:
        raise FormatError(f"{path}: payload {len(payload)} bytes, "
                          f"expected {2 * npts * 16}")
    raw = np.frombuffer(payload, dtype="<c16")
    meta = {}
    sidecar = str(path) + ".json"
    if os.path.exists(sidecar):
        with open(sidecar) as fh:
            meta = json.load(fh)
    return Snapshot(psi1=raw[:npts].reshape(points).copy(),
                    psi2=raw[npts:].reshape(points).copy(),
                    spacings=spacings, time=time, meta=meta)


@dataclass
class Decomposition:
    mode: str
    l: np.ndarray
    k: np.ndarray
    coeffs: np.ndarray


def read_decomposition(path):
    with open(path, "rb") as fh:
        head = fh.read(_GPD_HEADER.size)
        if len(head) < _GPD_HEADER.size:
            raise FormatError(f"{path}: truncated decomposition header")
        magic, version, mode, _, n_l, n_k = _GPD_HEADER.unpack(head)
        if magic != b"GPD1":
            raise FormatError(f"{path}: not a GPD1 block (magic {magic!r})")
        if version != 1 or mode not in (1, 2):
            raise FormatError(f"{path}: unsupported version/mode")
        body = fh.read()
    if len(body) != 8 * (n_k + n_l) + 16 * n_l * n_k:
        raise FormatError(f"{path}: bad payload length")
    k = np.frombuffer(body[: 8 * n_k], dtype="<f8").copy()
    l = np.frombuffer(body[8 * n_k: 8 * (n_k + n_l)], dtype="<f8").copy()
    coeffs = np.frombuffer(body[8 * (n_k + n_l):],
                           dtype="<c16").reshape(n_l, n_k).copy()
    return Decomposition(mode={1: "fourier1d", 2: "bessel2d"}[mode],
                         l=l, k=k, coeffs=coeffs)


def read_manifest(run_dir):
    path = os.path.join(run_dir, "manifest.json")
    with open(path) as fh:
        raw = json.load(fh)
    if raw.get("schema") != 1:
        raise FormatError(f"{path}: unsupported manifest schema")
    return raw


def read_tsv(path):
    """(header list, float ndarray) of a tab-delimited table; non-numeric
    cells come back as NaN."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        rows = []
        for line in fh:
            if not line.strip():
                continue
            vals = []
            for tok in line.rstrip("\n").split("\t"):
                try:
                    vals.append(float(tok))
                except ValueError:
                    vals.append(float("nan"))
            rows.append(vals)
    data = np.array(rows) if rows else np.empty((0, len(header)))
    return header, data


def read_config(run_dir):
    with open(os.path.join(run_dir, "config.json")) as fh:
        return json.load(fh)


def load_run(run_dir):
    """Manifest plus lazily usable snapshot entries, sorted by time."""
    manifest = read_manifest(run_dir)
    entries = sorted(manifest.get("snapshots", []), key=lambda e: e["time"])
    return manifest, entries
