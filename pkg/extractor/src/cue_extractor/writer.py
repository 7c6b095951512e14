"""Writer for the cuekit tensor file format and dataset manifest.

The format is a 16-byte header (magic ``CUET``, u32 version = 1, u32 rows,
u32 dims, all little-endian) followed by the row-major payload: 32-bit
floats for matrices, unsigned 32-bit integers (dims = 1) for label
vectors.  This module implements the byte layout directly so the extractor
stays decoupled from the training toolkit.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CUET"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_float_matrix(path: str | Path, matrix: np.ndarray) -> None:
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes(order="C"))


def write_label_vector(path: str | Path, labels: np.ndarray) -> None:
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError(f"labels must be 1-D, got ndim={arr.ndim}")
    if arr.size and arr.min() < 0:
        raise ValueError("labels must be non-negative")
    payload = np.ascontiguousarray(arr.reshape(-1, 1), dtype="<u4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, payload.shape[0], 1))
        fh.write(payload.tobytes(order="C"))


def write_manifest(
    path: str | Path,
    classes: list[str],
    features_path: str,
    prototypes_path: str,
    labels_path: str,
    d: int,
    n: int,
    source: str,
) -> None:
    doc = {
        "classes": list(classes),
        "features_path": features_path,
        "prototypes_path": prototypes_path,
        "labels_path": labels_path,
        "d": int(d),
        "n": int(n),
        "source": source,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
