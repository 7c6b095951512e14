"""Zero-shot scoring and cue-to-target expansion.

Cues are auxiliary semantically related classes attached to each training
sample: instance-level cues come from the Top-k non-ground-truth classes of
the zero-shot similarity scores, class-level cues from an offline neighbor
graph.  Either kind expands into a binary multi-label target whose row
always contains the ground-truth class.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .neighbors import NeighborGraph

logger = logging.getLogger(__name__)

CUE_MODES = ("top", "random", "last")


def _normalize_rows(matrix: np.ndarray, name: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        raise ValueError(f"{name} row {int(bad[0])} has zero norm; cannot compute cosine scores")
    return matrix / norms[:, None]


def zero_shot_logits(embeddings: np.ndarray, prototypes: np.ndarray) -> np.ndarray:
    """Cosine similarity of every embedding against every class prototype.

    Output is (N, C) in [-1, 1] and invariant to positive row scaling of
    either input.
    """
    emb = _normalize_rows(embeddings, "embeddings")
    proto = _normalize_rows(prototypes, "prototypes")
    if emb.shape[1] != proto.shape[1]:
        raise ValueError(
            f"embedding dim {emb.shape[1]} does not match prototype dim {proto.shape[1]}"
        )
    return np.clip(emb @ proto.T, -1.0, 1.0)


def _clamp_k(k: int, num_classes: int) -> int:
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k > num_classes - 1:
        logger.warning(
            "k=%d exceeds the %d available non-ground-truth classes; clamping", k, num_classes - 1
        )
        return num_classes - 1
    return k


def _ranked_non_gt(scores: np.ndarray, labels: np.ndarray, descending: bool) -> np.ndarray:
    """All non-ground-truth classes per row, ranked by score.

    Stable sort keeps ties in ascending class-index order.
    """
    n, num_classes = scores.shape
    keys = -scores if descending else scores
    order = np.argsort(keys, axis=1, kind="stable")
    keep = order != labels[:, None]
    return order[keep].reshape(n, num_classes - 1)


def topk_cues(scores: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Top-k non-ground-truth classes per sample, highest score first.

    Ties break toward the smaller class index.  Returns (N, min(k, C-1)).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    k = _clamp_k(k, scores.shape[1])
    return _ranked_non_gt(scores, labels, descending=True)[:, :k]


def variant_cues(
    scores: np.ndarray,
    labels: np.ndarray,
    k: int,
    mode: str = "top",
    seed: int = 0,
) -> np.ndarray:
    """Cue selection with quality variants: top, random, or last.

    ``top`` matches :func:`topk_cues`; ``last`` picks the k lowest-scoring
    non-ground-truth classes in ascending score order; ``random`` samples k
    non-ground-truth classes uniformly without replacement under the seed.
    """
    if mode not in CUE_MODES:
        raise ValueError(f"mode must be one of {CUE_MODES}, got {mode!r}")
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n, num_classes = scores.shape
    k = _clamp_k(k, num_classes)
    if mode == "top":
        return topk_cues(scores, labels, k)
    if mode == "last":
        return _ranked_non_gt(scores, labels, descending=False)[:, :k]
    rng = np.random.default_rng(seed)
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        candidates = np.delete(np.arange(num_classes), labels[i])
        out[i] = rng.choice(candidates, size=k, replace=False)
    return out


@dataclass
class CueTargets:
    """Binary multi-label targets, one row per sample."""

    targets: np.ndarray  # (N, C) uint8
    kind: str  # "zs" or "llm"
    k: Optional[int] = None  # cue count, zs only

    def __post_init__(self) -> None:
        if self.kind not in ("zs", "llm"):
            raise ValueError(f"kind must be 'zs' or 'llm', got {self.kind!r}")
        self.targets = np.asarray(self.targets, dtype=np.uint8)
        if not np.all((self.targets == 0) | (self.targets == 1)):
            raise ValueError("targets must be binary")


def expand_targets_zs(cues: np.ndarray, labels: np.ndarray, num_classes: int) -> CueTargets:
    """Binary targets with ones at the ground truth and its instance cues."""
    labels = np.asarray(labels)
    n = labels.shape[0]
    cues = np.asarray(cues, dtype=np.int64).reshape(n, -1)
    if cues.size and (cues.min() < 0 or cues.max() >= num_classes):
        raise ValueError(f"cue index outside [0, {num_classes})")
    if np.any(cues == labels[:, None]):
        bad = int(np.argmax(np.any(cues == labels[:, None], axis=1)))
        raise ValueError(f"cue list of sample {bad} contains its own ground-truth class")
    if cues.shape[1] > 1 and np.any(np.sort(cues, axis=1)[:, 1:] == np.sort(cues, axis=1)[:, :-1]):
        raise ValueError("cue lists must be duplicate-free")
    targets = np.zeros((n, num_classes), dtype=np.uint8)
    targets[np.arange(n), labels] = 1
    rows = np.repeat(np.arange(n), cues.shape[1])
    targets[rows, cues.ravel()] = 1
    return CueTargets(targets=targets, kind="zs", k=cues.shape[1])


def expand_targets_llm(graph: NeighborGraph, labels: np.ndarray, num_classes: int) -> CueTargets:
    """Binary targets with ones at the ground truth and its class neighbors."""
    labels = np.asarray(labels)
    if len(graph.neighbors) != num_classes:
        raise ValueError(
            f"graph covers {len(graph.neighbors)} classes, dataset has {num_classes}"
        )
    for cls, neigh in enumerate(graph.neighbors):
        if any(v < 0 or v >= num_classes for v in neigh):
            raise ValueError(f"neighbor list of class {cls} has an index outside [0, {num_classes})")
    n = labels.shape[0]
    class_rows = np.zeros((num_classes, num_classes), dtype=np.uint8)
    for cls, neigh in enumerate(graph.neighbors):
        class_rows[cls, cls] = 1
        class_rows[cls, list(neigh)] = 1
    return CueTargets(targets=class_rows[labels], kind="llm")


def cue_cache_key(manifest_doc: dict, split_doc: dict) -> str:
    """Content hash tying a cue cache to the manifest and split it came from."""
    blob = json.dumps({"manifest": manifest_doc, "split": split_doc}, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def save_cue_cache(
    path: str | Path,
    cues: np.ndarray,
    kind: str,
    k: int,
    mode: str,
    key: str,
) -> None:
    doc = {
        "kind": kind,
        "k": int(k),
        "mode": mode,
        "key": key,
        "per_sample_cue_lists": np.asarray(cues).tolist(),
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_cue_cache(path: str | Path, expected_key: Optional[str] = None) -> tuple[np.ndarray, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if expected_key is not None and doc.get("key") != expected_key:
        raise ValueError(
            f"cue cache {path} was built for a different manifest/split "
            f"(key {doc.get('key', '?')[:12]}..., expected {expected_key[:12]}...)"
        )
    cues = np.asarray(doc["per_sample_cue_lists"], dtype=np.int64)
    return cues, doc
