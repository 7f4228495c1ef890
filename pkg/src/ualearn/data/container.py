"""Versioned binary dataset container (magic "UALD").

Layout, little-endian throughout:

    magic    4s   b"UALD"
    version  u32  (currently 1)
    ndim     u32  1 for tabular (d), 3 for images (H, W, C)
    dims     ndim x u64
    n        u64
    K        u32
    features n * prod(dims) float64, row-major
    labels   n * int64
    ids      n x (u32 length + UTF-8 bytes)
"""

import struct

import numpy as np

from ..errors import IntegrityError, ParseError
from .datasets import Dataset

MAGIC = b"UALD"
VERSION = 1


def save_dataset(dataset, path):
    dims = dataset.features.shape[1:]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(dims)))
        fh.write(struct.pack(f"<{len(dims)}Q", *dims))
        fh.write(struct.pack("<QI", len(dataset), dataset.class_count))
        fh.write(np.ascontiguousarray(dataset.features, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(dataset.labels, dtype="<i8").tobytes())
        for sid in dataset.sample_ids:
            raw = sid.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)


def _read_exact(fh, size, what):
    buf = fh.read(size)
    if len(buf) != size:
        raise IntegrityError(f"truncated container while reading {what}")
    return buf


def load_dataset(path):
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != MAGIC:
            raise ParseError(f"{path}: not a UALD container")
        version, ndim = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != VERSION:
            raise ParseError(f"{path}: unsupported container version {version}")
        if ndim not in (1, 3):
            raise ParseError(f"{path}: invalid feature rank {ndim}")
        dims = struct.unpack(f"<{ndim}Q", _read_exact(fh, 8 * ndim, "dims"))
        n, k = struct.unpack("<QI", _read_exact(fh, 12, "sizes"))
        count = n * int(np.prod(dims))
        features = np.frombuffer(
            _read_exact(fh, 8 * count, "features"), dtype="<f8").reshape((n, *dims))
        labels = np.frombuffer(_read_exact(fh, 8 * n, "labels"), dtype="<i8")
        ids = []
        for i in range(n):
            (length,) = struct.unpack("<I", _read_exact(fh, 4, f"id {i}"))
            ids.append(_read_exact(fh, length, f"id {i}").decode("utf-8"))
        trailing = fh.read(1)
        if trailing:
            raise IntegrityError(f"{path}: trailing bytes after container payload")
    return Dataset(features.copy(), labels.copy(), int(k), ids)
