"""Sample files: a 32-byte header followed by little-endian float64 rows.

Header layout: 8-byte magic, uint64 dim, uint64 row count, uint32 dtype
code, 4 reserved bytes. A ``.json`` sidecar next to the file carries
free-form metadata. Rows can be appended while a chain is running; the row
count is rewritten on close.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"WBNNSAMP"
HEADER = struct.Struct("<8sQQI4x")
DTYPES = {1: np.dtype("<f8")}


class SampleWriter:
    def __init__(self, path, dim: int):
        self.path = Path(path)
        self.dim = int(dim)
        self.rows = 0
        self._fh = self.path.open("wb")
        self._fh.write(HEADER.pack(MAGIC, self.dim, 0, 1))

    def append(self, rows: np.ndarray):
        rows = np.atleast_2d(np.asarray(rows, dtype="<f8"))
        if rows.shape[1] != self.dim:
            raise ValueError(f"expected rows of length {self.dim}, got {rows.shape[1]}")
        self._fh.write(rows.tobytes())
        self.rows += rows.shape[0]

    def close(self):
        if self._fh.closed:
            return
        self._fh.seek(0)
        self._fh.write(HEADER.pack(MAGIC, self.dim, self.rows, 1))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_samples(path, samples: np.ndarray, metadata: dict | None = None):
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    with SampleWriter(path, samples.shape[1]) as w:
        w.append(samples)
    if metadata is not None:
        sidecar_path(path).write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_samples(path):
    """``(samples (S, dim), metadata dict or None)``."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, dim, rows, code = HEADER.unpack_from(raw)
    if magic != MAGIC or code not in DTYPES:
        raise ValueError(f"{path}: not a sample file")
    body = np.frombuffer(raw, dtype=DTYPES[code], offset=HEADER.size)
    if body.size != dim * rows:
        raise ValueError(f"{path}: expected {dim * rows} values, found {body.size}")
    side = sidecar_path(path)
    meta = json.loads(side.read_text(encoding="utf-8")) if side.exists() else None
    return body.reshape(rows, dim).astype(float), meta


def load_vector(path) -> np.ndarray:
    """A parameter vector from ``.npy``, whitespace text, or a sample file (last row)."""
    path = Path(path)
    if path.suffix == ".npy":
        return np.asarray(np.load(path), dtype=float).ravel()
    with path.open("rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        samples, _ = read_samples(path)
        if samples.shape[0] == 0:
            raise ValueError(f"{path}: no samples")
        return samples[-1]
    return np.loadtxt(path, dtype=float).ravel()


def fmt(x) -> str:
    """Shortest round-trip float text; empty for None."""
    if x is None:
        return ""
    return repr(float(x))
