"""Binary tensor files and the dataset manifest.

All arrays move between tools as little-endian fixed-width binary files with
a 16-byte header (magic ``CUET``, format version, rows, dims).  Float payloads
are 32-bit IEEE floats, row-major; label payloads are unsigned 32-bit
integers with ``dims == 1``.  A manifest JSON document ties together the
feature matrix, per-class text prototypes, and label vector of one dataset.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import LabeledEmbeddings

MAGIC = b"CUET"
VERSION = 1

_HEADER = struct.Struct("<4sIII")  # magic, version, rows, dims
_MAX_U32 = 2**32 - 1


class TensorFormatError(Exception):
    """Base class for malformed tensor files."""


class BadMagicError(TensorFormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(TensorFormatError):
    """File declares an unsupported format version."""


class TruncatedPayloadError(TensorFormatError):
    """Payload is shorter than the header declares."""


class ManifestError(Exception):
    """Manifest contents are inconsistent with the referenced files."""


class DimensionMismatchError(ManifestError):
    """A referenced file has a shape that contradicts the manifest."""


class LabelRangeError(ManifestError):
    """Labels file contains an index outside [0, C)."""


def _write_payload(path: str | Path, array: np.ndarray, dtype: str) -> None:
    arr = np.ascontiguousarray(array, dtype=dtype)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got ndim={arr.ndim}")
    rows, dims = arr.shape
    if rows > _MAX_U32 or dims > _MAX_U32:
        raise ValueError(f"shape {arr.shape} does not fit in unsigned 32-bit fields")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, rows, dims))
        fh.write(arr.tobytes(order="C"))


def _read_payload(path: str | Path, dtype: str) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: file shorter than the 16-byte header")
    magic, version, rows, dims = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    expected = rows * dims * 4
    payload = len(data) - _HEADER.size
    if payload < expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {payload} bytes, header declares {expected}"
        )
    if payload > expected:
        raise TensorFormatError(
            f"{path}: {payload - expected} trailing bytes beyond the declared payload"
        )
    out = np.frombuffer(data, dtype=dtype, count=rows * dims, offset=_HEADER.size)
    return out.reshape(rows, dims).copy()


def write_tensor(path: str | Path, matrix: np.ndarray) -> None:
    """Write a 2-D float32 matrix; bit patterns are preserved exactly."""
    _write_payload(path, matrix, "<f4")


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a matrix written by :func:`write_tensor`."""
    return _read_payload(path, "<f4")


def write_labels(path: str | Path, labels: np.ndarray) -> None:
    """Write a label vector as an n x 1 unsigned 32-bit payload."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError(f"labels must be 1-D, got ndim={arr.ndim}")
    if arr.size and (arr.min() < 0 or arr.max() > _MAX_U32):
        raise ValueError("labels do not fit in unsigned 32-bit")
    _write_payload(path, arr.reshape(-1, 1), "<u4")


def read_labels(path: str | Path) -> np.ndarray:
    """Read a label vector written by :func:`write_labels`."""
    arr = _read_payload(path, "<u4")
    if arr.shape[1] != 1:
        raise TensorFormatError(f"{path}: labels file must have dims=1, got {arr.shape[1]}")
    return arr[:, 0].astype(np.int64)


@dataclass
class Manifest:
    """Describes one embedding dataset on disk.

    Paths are relative to the manifest's own directory.
    """

    classes: list[str]
    features_path: str
    prototypes_path: str
    labels_path: str
    d: int
    n: int
    source: str = ""

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "features_path": self.features_path,
            "prototypes_path": self.prototypes_path,
            "labels_path": self.labels_path,
            "d": self.d,
            "n": self.n,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Manifest":
        return cls(
            classes=list(doc["classes"]),
            features_path=doc["features_path"],
            prototypes_path=doc["prototypes_path"],
            labels_path=doc["labels_path"],
            d=int(doc["d"]),
            n=int(doc["n"]),
            source=doc.get("source", ""),
        )


def save_manifest(path: str | Path, manifest: Manifest) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> Manifest:
    return Manifest.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_dataset(
    manifest_path: str | Path,
    dataset: LabeledEmbeddings,
    prototypes: np.ndarray,
    source: str = "",
) -> Manifest:
    """Write features/prototypes/labels next to ``manifest_path`` and the manifest itself."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    base.mkdir(parents=True, exist_ok=True)
    stem = manifest_path.stem
    manifest = Manifest(
        classes=list(dataset.class_names),
        features_path=f"{stem}_features.cuet",
        prototypes_path=f"{stem}_prototypes.cuet",
        labels_path=f"{stem}_labels.cuet",
        d=dataset.dim,
        n=dataset.num_samples,
        source=source,
    )
    write_tensor(base / manifest.features_path, dataset.features)
    write_tensor(base / manifest.prototypes_path, prototypes)
    write_labels(base / manifest.labels_path, dataset.labels)
    save_manifest(manifest_path, manifest)
    return manifest


def load_dataset(manifest_path: str | Path) -> tuple[LabeledEmbeddings, np.ndarray]:
    """Load and validate the dataset a manifest describes.

    Returns the labeled embeddings and the C x d prototype matrix.
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent
    for rel in (manifest.features_path, manifest.prototypes_path, manifest.labels_path):
        if not (base / rel).exists():
            raise FileNotFoundError(f"manifest references missing file: {base / rel}")

    features = read_tensor(base / manifest.features_path)
    prototypes = read_tensor(base / manifest.prototypes_path)
    labels = read_labels(base / manifest.labels_path)
    num_classes = len(manifest.classes)

    if features.shape != (manifest.n, manifest.d):
        raise DimensionMismatchError(
            f"features are {features.shape}, manifest declares ({manifest.n}, {manifest.d})"
        )
    if prototypes.shape != (num_classes, manifest.d):
        raise DimensionMismatchError(
            f"prototypes are {prototypes.shape}, expected ({num_classes}, {manifest.d})"
        )
    if labels.shape[0] != manifest.n:
        raise DimensionMismatchError(
            f"labels file holds {labels.shape[0]} entries, manifest declares {manifest.n}"
        )
    if labels.size and labels.max() >= num_classes:
        raise LabelRangeError(
            f"labels file contains index {int(labels.max())} with only {num_classes} classes"
        )

    dataset = LabeledEmbeddings(
        features=features, labels=labels, class_names=list(manifest.classes)
    )
    return dataset, prototypes
