"""Controlled-experiment harness: ablation arms and the weight-sensitivity grid.

Every arm shares the same split, zero-shot scores, and neighbor graph; arms
differ only in which cue losses are active and how cues are selected, so
differences in outcome are attributable to the loss targets alone.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cues import expand_targets_llm, expand_targets_zs, variant_cues, zero_shot_logits
from .dataset import LabeledEmbeddings, compute_prior
from .metrics import EvalReport, evaluate
from .neighbors import NeighborGraph
from .trainer import Head, TrainConfig, predict, train

SWEEP_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass
class ArmSpec:
    name: str
    lambda_zs: float
    lambda_llm: float
    mode: str = "top"


def standard_arms(lambda_zs: float, lambda_llm: float) -> list[ArmSpec]:
    """The seven arms: component ablation plus cue-quality variants."""
    return [
        ArmSpec("baseline", 0.0, 0.0),
        ArmSpec("vlm_only", lambda_zs, 0.0),
        ArmSpec("llm_only", 0.0, lambda_llm),
        ArmSpec("both", lambda_zs, lambda_llm),
        ArmSpec("top_k", lambda_zs, 0.0, mode="top"),
        ArmSpec("random_k", lambda_zs, 0.0, mode="random"),
        ArmSpec("last_k", lambda_zs, 0.0, mode="last"),
    ]


@dataclass
class ExperimentData:
    """Shared artifacts every arm trains against.

    ``zs_scores`` may be passed in (e.g. loaded from a persisted zero-shot
    artifact) so every arm consumes byte-identical scores; left unset, it
    is computed from the features.
    """

    train: LabeledEmbeddings
    test: LabeledEmbeddings
    prototypes: np.ndarray
    graph: NeighborGraph
    train_counts: np.ndarray
    zs_scores: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.zs_scores is None:
            self.zs_scores = zero_shot_logits(self.train.features, self.prototypes)
        self.prior = compute_prior(self.train_counts)


@dataclass
class ArmResult:
    arm: str
    seed: int
    report: EvalReport
    model: Head
    model_sha256: str

    def row(self) -> dict:
        return {
            "arm": self.arm,
            "seed": self.seed,
            "all": self.report.overall_acc,
            "many": self.report.acc_many,
            "medium": self.report.acc_medium,
            "few": self.report.acc_few,
            "balancedness": self.report.balancedness,
            "model_sha256": self.model_sha256,
        }


def head_digest(model: Head) -> str:
    """Hash of the head's weights exactly as they would be persisted."""
    digest = hashlib.sha256()
    for name, arr, _ in model.params():
        matrix = arr if arr.ndim == 2 else arr.reshape(1, -1)
        digest.update(name.encode())
        digest.update(np.ascontiguousarray(matrix, dtype="<f4").tobytes())
    return digest.hexdigest()


def run_arm(
    data: ExperimentData,
    arm: ArmSpec,
    base_config: TrainConfig,
    k: int,
    seed: int,
    sigma: float = 0.1,
) -> ArmResult:
    """Train one arm and evaluate it on the balanced test set."""
    loss = replace(base_config.loss, lambda_zs=arm.lambda_zs, lambda_llm=arm.lambda_llm)
    config = replace(base_config, seed=seed, loss=loss)
    num_classes = data.train.num_classes
    cues = variant_cues(data.zs_scores, data.train.labels, k, mode=arm.mode, seed=seed)
    t_zs = expand_targets_zs(cues, data.train.labels, num_classes).targets
    t_llm = expand_targets_llm(data.graph, data.train.labels, num_classes).targets
    report = train(data.train, data.prior, t_zs, t_llm, config, prototypes=data.prototypes)
    preds = predict(report.model, data.test.features)
    eval_report = evaluate(preds, data.test.labels, data.train_counts, sigma=sigma)
    return ArmResult(
        arm=arm.name,
        seed=seed,
        report=eval_report,
        model=report.model,
        model_sha256=head_digest(report.model),
    )


def run_ablation(
    data: ExperimentData,
    base_config: TrainConfig,
    k: int,
    seeds: Sequence[int],
    lambda_zs: Optional[float] = None,
    lambda_llm: Optional[float] = None,
    sigma: float = 0.1,
) -> list[ArmResult]:
    """All seven arms over every seed; rows = 7 x len(seeds)."""
    lz = base_config.loss.lambda_zs if lambda_zs is None else lambda_zs
    ll = base_config.loss.lambda_llm if lambda_llm is None else lambda_llm
    results = []
    for arm in standard_arms(lz, ll):
        for seed in seeds:
            results.append(run_arm(data, arm, base_config, k, seed, sigma=sigma))
    return results


def summarize_arms(results: list[ArmResult]) -> dict[str, dict]:
    """Mean accuracy per arm over seeds; None splits stay None."""
    by_arm: dict[str, list[ArmResult]] = {}
    for result in results:
        by_arm.setdefault(result.arm, []).append(result)

    def mean(values: list[Optional[float]]) -> Optional[float]:
        present = [v for v in values if v is not None]
        return float(np.mean(present)) if present else None

    summary = {}
    for arm, rows in by_arm.items():
        summary[arm] = {
            "all": mean([r.report.overall_acc for r in rows]),
            "many": mean([r.report.acc_many for r in rows]),
            "medium": mean([r.report.acc_medium for r in rows]),
            "few": mean([r.report.acc_few for r in rows]),
            "seeds": [r.seed for r in rows],
        }
    return summary


def ablation_table(results: list[ArmResult]) -> str:
    summary = summarize_arms(results)

    def fmt(value: Optional[float]) -> str:
        return "   -  " if value is None else f"{100 * value:6.2f}"

    lines = [f"{'arm':<12} {'all':>7} {'many':>7} {'medium':>7} {'few':>7}  (mean over seeds)"]
    for arm, row in summary.items():
        lines.append(
            f"{arm:<12} {fmt(row['all']):>7} {fmt(row['many']):>7} "
            f"{fmt(row['medium']):>7} {fmt(row['few']):>7}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class SweepResult:
    grid: tuple[float, ...]
    all_acc: np.ndarray  # (5, 5): rows lambda_zs, cols lambda_llm
    few_acc: np.ndarray
    model_sha256: dict  # (i, j) -> digest


def run_sweep(
    data: ExperimentData,
    base_config: TrainConfig,
    k: int,
    seed: int,
    grid: Sequence[float] = SWEEP_GRID,
    sigma: float = 0.1,
) -> SweepResult:
    """Train the full (lambda_zs, lambda_llm) grid under one seed."""
    grid = tuple(grid)
    size = len(grid)
    all_acc = np.zeros((size, size))
    few_acc = np.full((size, size), np.nan)
    digests = {}
    for i, lz in enumerate(grid):
        for j, ll in enumerate(grid):
            result = run_arm(
                data, ArmSpec(f"grid_{i}_{j}", lz, ll), base_config, k, seed, sigma=sigma
            )
            all_acc[i, j] = result.report.overall_acc
            few_acc[i, j] = result.report.acc_few if result.report.acc_few is not None else np.nan
            digests[(i, j)] = result.model_sha256
    return SweepResult(grid=grid, all_acc=all_acc, few_acc=few_acc, model_sha256=digests)


def write_sweep_csv(path: str | Path, grid: Sequence[float], matrix: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda_zs\\lambda_llm"] + [repr(v) for v in grid])
        for value, row in zip(grid, matrix):
            writer.writerow([repr(value)] + [repr(float(cell)) for cell in row])


def read_sweep_csv(path: str | Path) -> tuple[list[float], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    grid = [float(v) for v in rows[0][1:]]
    matrix = np.array([[float(cell) for cell in row[1:]] for row in rows[1:]])
    return grid, matrix
