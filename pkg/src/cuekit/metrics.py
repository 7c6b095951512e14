"""Evaluation suite: split accuracies, balancedness, and confusion transitions.

Split accuracies are macro-means of per-class accuracy over the classes in
each shot split.  Balancedness is the mean pairwise Gaussian-kernel
similarity of per-class accuracies (1.0 when every class performs equally).
The transition analysis compares zero-shot and fine-tuned predictions per
class and measures how many newly introduced errors land on semantic
neighbors of the true class.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import FEW, MANY, MEDIUM, assign_shot_split
from .neighbors import NeighborGraph

DEFAULT_SIGMA = 0.1

TRANSITION_CELLS = (
    "zs_correct_ft_correct",
    "zs_correct_ft_wrong",
    "zs_wrong_ft_correct",
    "zs_wrong_ft_wrong",
)


@dataclass
class EvalReport:
    overall_acc: float
    acc_many: Optional[float]
    acc_medium: Optional[float]
    acc_few: Optional[float]
    per_class_acc: np.ndarray  # NaN for classes with no test samples
    balancedness: float
    mean_misclassified: dict  # split name -> mean wrong count, absent splits omitted

    def to_dict(self) -> dict:
        return {
            "overall_acc": self.overall_acc,
            "acc_many": self.acc_many,
            "acc_medium": self.acc_medium,
            "acc_few": self.acc_few,
            "per_class_acc": [None if np.isnan(a) else float(a) for a in self.per_class_acc],
            "balancedness": self.balancedness,
            "mean_misclassified": dict(self.mean_misclassified),
        }

    def to_text(self) -> str:
        def fmt(value: Optional[float]) -> str:
            return "-" if value is None else f"{100 * value:6.2f}"

        lines = [
            f"{'split':<10} {'acc%':>8}",
            f"{'all':<10} {fmt(self.overall_acc):>8}",
            f"{'many':<10} {fmt(self.acc_many):>8}",
            f"{'medium':<10} {fmt(self.acc_medium):>8}",
            f"{'few':<10} {fmt(self.acc_few):>8}",
            "",
            f"balancedness: {self.balancedness:.4f}",
            "mean misclassified per class: "
            + ", ".join(f"{k}={v:.2f}" for k, v in self.mean_misclassified.items()),
        ]
        return "\n".join(lines) + "\n"

    def per_class_csv(self, path: str | Path, train_counts: np.ndarray) -> None:
        split = assign_shot_split(train_counts)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["class", "train_count", "split", "accuracy"])
            for cls, acc in enumerate(self.per_class_acc):
                writer.writerow(
                    [cls, int(train_counts[cls]), split[cls], "" if np.isnan(acc) else f"{acc:.6f}"]
                )


@dataclass
class TransitionReport:
    counts: dict  # cell name -> length-C int array (as lists in JSON)
    neighbor_error_fraction: Optional[float]

    def total(self) -> int:
        return int(sum(np.sum(self.counts[cell]) for cell in TRANSITION_CELLS))

    def to_dict(self) -> dict:
        return {
            "counts": {cell: np.asarray(self.counts[cell]).tolist() for cell in TRANSITION_CELLS},
            "neighbor_error_fraction": self.neighbor_error_fraction,
        }

    def to_text(self) -> str:
        header = f"{'class':<8}" + "".join(f"{cell:>24}" for cell in TRANSITION_CELLS)
        lines = [header]
        num_classes = len(self.counts[TRANSITION_CELLS[0]])
        for cls in range(num_classes):
            row = f"{cls:<8}" + "".join(
                f"{int(self.counts[cell][cls]):>24}" for cell in TRANSITION_CELLS
            )
            lines.append(row)
        frac = (
            "-" if self.neighbor_error_fraction is None else f"{self.neighbor_error_fraction:.4f}"
        )
        lines.append(f"neighbor fraction of new errors: {frac}")
        return "\n".join(lines) + "\n"


def per_class_accuracy(predictions: np.ndarray, labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Accuracy per class; NaN where the class has no test samples."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError(f"{predictions.shape} predictions vs {labels.shape} labels")
    totals = np.bincount(labels, minlength=num_classes).astype(np.float64)
    correct = np.bincount(labels[predictions == labels], minlength=num_classes).astype(np.float64)
    with np.errstate(invalid="ignore"):
        return np.where(totals > 0, correct / np.maximum(totals, 1), np.nan)


def balancedness(per_class_acc: np.ndarray, sigma: float = DEFAULT_SIGMA) -> float:
    """Mean pairwise Gaussian similarity of class accuracies, including i == j."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    acc = np.asarray(per_class_acc, dtype=np.float64)
    acc = acc[~np.isnan(acc)]
    if acc.size == 0:
        raise ValueError("no classes with defined accuracy")
    diff = acc[:, None] - acc[None, :]
    return float(np.mean(np.exp(-(diff**2) / (2.0 * sigma**2))))


def mean_misclassified(
    predictions: np.ndarray, labels: np.ndarray, shot_split: np.ndarray
) -> dict:
    """Per-split mean count of wrongly predicted test samples per class."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    num_classes = len(shot_split)
    wrong = np.bincount(labels[predictions != labels], minlength=num_classes).astype(np.float64)
    out: dict[str, float] = {}
    for name in (MANY, MEDIUM, FEW):
        members = np.asarray(shot_split) == name
        if members.any():
            out[name] = float(wrong[members].mean())
    return out


def evaluate(
    predictions: np.ndarray,
    labels: np.ndarray,
    train_counts: np.ndarray,
    sigma: float = DEFAULT_SIGMA,
) -> EvalReport:
    """Full evaluation against the shot split implied by the training counts."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError(f"{predictions.shape} predictions vs {labels.shape} labels")
    train_counts = np.asarray(train_counts)
    num_classes = len(train_counts)
    if labels.size and labels.max() >= num_classes:
        raise ValueError("test labels reference a class absent from train_counts")

    acc = per_class_accuracy(predictions, labels, num_classes)
    split = assign_shot_split(train_counts)

    def split_mean(name: str) -> Optional[float]:
        members = (split == name) & ~np.isnan(acc)
        if not members.any():
            return None
        return float(acc[members].mean())

    return EvalReport(
        overall_acc=float(np.mean(predictions == labels)),
        acc_many=split_mean(MANY),
        acc_medium=split_mean(MEDIUM),
        acc_few=split_mean(FEW),
        per_class_acc=acc,
        balancedness=balancedness(acc, sigma),
        mean_misclassified=mean_misclassified(predictions, labels, split),
    )


def transition_analysis(
    zs_predictions: np.ndarray,
    ft_predictions: np.ndarray,
    labels: np.ndarray,
    graph: NeighborGraph,
) -> TransitionReport:
    """Per-class zero-shot vs fine-tuned 2x2 transition counts.

    The neighbor fraction is computed over the zs-correct -> ft-wrong cell
    only: the share of those errors whose predicted class is a semantic
    neighbor of the true class.  With no such errors it is reported absent.
    """
    zs_predictions = np.asarray(zs_predictions)
    ft_predictions = np.asarray(ft_predictions)
    labels = np.asarray(labels)
    if not (zs_predictions.shape == ft_predictions.shape == labels.shape):
        raise ValueError("zero-shot predictions, fine-tuned predictions, and labels must align")
    num_classes = len(graph.classes)

    zs_ok = zs_predictions == labels
    ft_ok = ft_predictions == labels
    cells = {
        "zs_correct_ft_correct": zs_ok & ft_ok,
        "zs_correct_ft_wrong": zs_ok & ~ft_ok,
        "zs_wrong_ft_correct": ~zs_ok & ft_ok,
        "zs_wrong_ft_wrong": ~zs_ok & ~ft_ok,
    }
    counts = {
        cell: np.bincount(labels[mask], minlength=num_classes).astype(int)
        for cell, mask in cells.items()
    }

    new_errors = np.flatnonzero(cells["zs_correct_ft_wrong"])
    if new_errors.size == 0:
        fraction = None
    else:
        neighbor_sets = [set(n) for n in graph.neighbors]
        hits = sum(
            1 for i in new_errors if int(ft_predictions[i]) in neighbor_sets[int(labels[i])]
        )
        fraction = hits / new_errors.size
    return TransitionReport(counts=counts, neighbor_error_fraction=fraction)


def save_report_json(path: str | Path, report: EvalReport | TransitionReport) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
