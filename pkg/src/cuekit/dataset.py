"""Long-tailed training subsets, class priors, and shot-split categories.

All functions are pure: they take immutable inputs, own their seeded
generator per call, and are safe to use from multiple threads.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MANY = "many"
MEDIUM = "medium"
FEW = "few"

# Shot-split thresholds on per-class training counts: Many-shot strictly
# above 100, Few-shot strictly below 20, Medium-shot the inclusive band.
MANY_THRESHOLD = 100
FEW_THRESHOLD = 20


@dataclass
class LabeledEmbeddings:
    """Feature vectors with integer labels and a class vocabulary."""

    features: np.ndarray  # (N, D) float32
    labels: np.ndarray  # (N,) int
    class_names: list[str]

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[1] < 1:
            raise ValueError(f"features must be (N, D) with D > 0, got {self.features.shape}")
        if self.labels.ndim != 1 or self.labels.shape[0] != self.features.shape[0]:
            raise ValueError(
                f"labels shape {self.labels.shape} does not match {self.features.shape[0]} rows"
            )
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class_names contains duplicates")
        num_classes = len(self.class_names)
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= num_classes):
            raise ValueError(
                f"labels must lie in [0, {num_classes}), found range "
                f"[{int(self.labels.min())}, {int(self.labels.max())}]"
            )

    @property
    def num_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def subset(self, indices: np.ndarray) -> "LabeledEmbeddings":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledEmbeddings(
            features=self.features[idx],
            labels=self.labels[idx],
            class_names=list(self.class_names),
        )


def class_counts(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Per-class sample counts; sums to len(labels)."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"labels outside [0, {num_classes})")
    return np.bincount(labels, minlength=num_classes).astype(np.int64)


def longtail_profile(num_classes: int, n_max: int, ir: float) -> np.ndarray:
    """Exponential per-class target counts from n_max down to n_max / ir.

    Position c in the returned array is the c-th largest class of the
    profile, not a class index.  Rounding is half-away-from-zero.
    """
    if ir < 1:
        raise ValueError(f"imbalance ratio must be >= 1, got {ir}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    if num_classes == 1:
        return np.array([n_max], dtype=np.int64)
    targets = []
    for c in range(num_classes):
        raw = n_max * ir ** (-c / (num_classes - 1))
        targets.append(int(math.floor(raw + 0.5)))
    return np.asarray(targets, dtype=np.int64)


def build_longtail_indices(
    labels: np.ndarray,
    num_classes: int,
    n_max: int,
    ir: float,
    seed: int,
) -> list[np.ndarray]:
    """Select a long-tailed subset of sample indices, one array per class.

    Target counts follow the exponential profile; the largest target goes to
    the class with the most available samples (ties broken by smaller class
    index).  Selection within a class is without replacement and is a
    deterministic function of the seed.
    """
    labels = np.asarray(labels)
    counts = class_counts(labels, num_classes)
    targets = longtail_profile(num_classes, n_max, ir)
    if targets.min() < 1:
        raise ValueError(
            f"profile assigns {int(targets.min())} samples to the smallest class; "
            "increase n_max or decrease ir so every class keeps at least one sample"
        )

    # Descending available count, ties by class index.
    order = np.lexsort((np.arange(num_classes), -counts))
    rng = np.random.default_rng(seed)
    selected: list[np.ndarray] = [np.empty(0, dtype=np.int64)] * num_classes
    for rank, cls in enumerate(order):
        want = int(targets[rank])
        have = int(counts[cls])
        if have < want:
            raise ValueError(
                f"class {int(cls)} has {have} samples, profile requires {want}"
            )
        pool = np.flatnonzero(labels == cls)
        picked = rng.permutation(pool)[:want]
        selected[int(cls)] = np.sort(picked)
    return selected


def compute_prior(counts: np.ndarray) -> np.ndarray:
    """Empirical class prior: counts normalized to probabilities."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("cannot compute a prior from all-zero counts")
    return counts / total


def assign_shot_split(counts: np.ndarray) -> np.ndarray:
    """Map per-class counts to {many, medium, few} categories.

    Boundary counts of 20 and 100 are Medium.
    """
    counts = np.asarray(counts)
    split = np.full(counts.shape, MEDIUM, dtype="<U6")
    split[counts > MANY_THRESHOLD] = MANY
    split[counts < FEW_THRESHOLD] = FEW
    return split


@dataclass
class SplitDescriptor:
    """Persisted record of one long-tailed split."""

    seed: int
    ir: float
    n_max: int
    per_class_counts: list[int]
    selected_indices: list[list[int]]

    def all_indices(self) -> np.ndarray:
        flat = [i for cls_idx in self.selected_indices for i in cls_idx]
        return np.asarray(flat, dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "ir": self.ir,
            "n_max": self.n_max,
            "per_class_counts": list(self.per_class_counts),
            "selected_indices": [list(map(int, cls_idx)) for cls_idx in self.selected_indices],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SplitDescriptor":
        return cls(
            seed=int(doc["seed"]),
            ir=float(doc["ir"]),
            n_max=int(doc["n_max"]),
            per_class_counts=[int(x) for x in doc["per_class_counts"]],
            selected_indices=[[int(i) for i in cls_idx] for cls_idx in doc["selected_indices"]],
        )


def build_split(labels: np.ndarray, num_classes: int, n_max: int, ir: float, seed: int) -> SplitDescriptor:
    """Build a long-tailed split and wrap it in its persistable descriptor."""
    selected = build_longtail_indices(labels, num_classes, n_max, ir, seed)
    return SplitDescriptor(
        seed=seed,
        ir=float(ir),
        n_max=int(n_max),
        per_class_counts=[len(s) for s in selected],
        selected_indices=[s.tolist() for s in selected],
    )


def save_split(path: str | Path, split: SplitDescriptor) -> None:
    Path(path).write_text(json.dumps(split.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_split(path: str | Path) -> SplitDescriptor:
    return SplitDescriptor.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
