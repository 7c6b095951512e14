"""SGD training of a classification head over frozen embeddings.

The default head is linear (weight matrix plus bias); an optional
one-hidden-layer ReLU head supports from-scratch style experiments.  The
loop is single-threaded and fully deterministic: shuffling, batching, and
every update are functions of (dataset, config, seed), so identical runs
produce bit-identical weights.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import tensorio
from .dataset import LabeledEmbeddings
from .losses import LossConfig, cue_loss_batch


@dataclass
class HeadModel:
    """Linear head: logits(x) = W x + b."""

    W: np.ndarray  # (C, D)
    b: np.ndarray  # (C,)

    def logits(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.W.shape[1]:
            raise ValueError(f"input dim {X.shape[1]} does not match head dim {self.W.shape[1]}")
        return X @ self.W.T + self.b

    def params(self) -> list[tuple[str, np.ndarray, bool]]:
        # (name, array, decay) triples; biases are excluded from weight decay
        return [("W", self.W, True), ("b", self.b, False)]


@dataclass
class MlpHead:
    """One-hidden-layer ReLU head for from-scratch style runs."""

    W1: np.ndarray  # (H, D)
    b1: np.ndarray  # (H,)
    W2: np.ndarray  # (C, H)
    b2: np.ndarray  # (C,)

    def logits(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.W1.shape[1]:
            raise ValueError(f"input dim {X.shape[1]} does not match head dim {self.W1.shape[1]}")
        hidden = np.maximum(X @ self.W1.T + self.b1, 0.0)
        return hidden @ self.W2.T + self.b2

    def params(self) -> list[tuple[str, np.ndarray, bool]]:
        return [("W1", self.W1, True), ("b1", self.b1, False), ("W2", self.W2, True), ("b2", self.b2, False)]


Head = Union[HeadModel, MlpHead]


@dataclass
class TrainConfig:
    """Optimizer recipe: SGD with momentum, coupled L2 decay, cosine schedule."""

    lr0: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 128
    epochs: int = 20
    seed: int = 0
    loss: LossConfig = field(default_factory=LossConfig)
    init: str = "prototype"  # or "zero"
    proto_scale: float = 1.0
    hidden_dim: int = 0  # 0 = linear head

    def __post_init__(self) -> None:
        if self.lr0 <= 0:
            raise ValueError(f"lr0 must be > 0, got {self.lr0}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.init not in ("zero", "prototype"):
            raise ValueError(f"init must be 'zero' or 'prototype', got {self.init!r}")
        if self.hidden_dim < 0:
            raise ValueError(f"hidden_dim must be >= 0, got {self.hidden_dim}")

    def to_dict(self) -> dict:
        return {
            "lr0": self.lr0,
            "momentum": self.momentum,
            "weight_decay": self.weight_decay,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "loss": self.loss.to_dict(),
            "init": self.init,
            "proto_scale": self.proto_scale,
            "hidden_dim": self.hidden_dim,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        doc = dict(doc)
        doc["loss"] = LossConfig.from_dict(doc.get("loss", LossConfig().to_dict()))
        return cls(**doc)


@dataclass
class TrainReport:
    """Per-epoch loss history plus the trained head and its recipe."""

    epoch_losses: list[dict]  # keys: total, la, bla_zs, bla_llm
    model: Head
    wall_clock_seconds: float
    config_hash: str
    config: "TrainConfig"


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the failing step index."""

    def __init__(self, step: int, value: float):
        super().__init__(f"non-finite loss {value} at step {step}")
        self.step = step


def config_hash(config: TrainConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def cosine_lr(lr0: float, step: int, total_steps: int) -> float:
    """Half-cosine decay from lr0 at step 0 to 0 at step == total_steps."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return 0.5 * lr0 * (1.0 + math.cos(math.pi * step / total_steps))


def sgd_step(
    params: np.ndarray,
    grads: np.ndarray,
    velocity: np.ndarray,
    lr: float,
    momentum: float,
    weight_decay: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Classic SGD with momentum and coupled L2 decay.

    g' = g + wd * w;  v <- mu * v + g';  w <- w - lr * v.
    """
    if params.shape != grads.shape or params.shape != velocity.shape:
        raise ValueError("params, grads, and velocity must share a shape")
    g = grads + weight_decay * params
    velocity = momentum * velocity + g
    params = params - lr * velocity
    return params, velocity


def init_head(
    dim: int,
    num_classes: int,
    config: TrainConfig,
    prototypes: Optional[np.ndarray] = None,
) -> Head:
    """Build the starting head per the config's init policy."""
    if config.hidden_dim > 0:
        # Hidden layers have no prototype analogue; use a seeded scaled-normal init.
        rng = np.random.default_rng(config.seed)
        h = config.hidden_dim
        scale1 = 1.0 / math.sqrt(dim)
        scale2 = 1.0 / math.sqrt(h)
        return MlpHead(
            W1=rng.normal(0.0, scale1, size=(h, dim)),
            b1=np.zeros(h),
            W2=rng.normal(0.0, scale2, size=(num_classes, h)),
            b2=np.zeros(num_classes),
        )
    if config.init == "zero":
        return HeadModel(W=np.zeros((num_classes, dim)), b=np.zeros(num_classes))
    if prototypes is None:
        raise ValueError("init='prototype' requires a prototype matrix")
    proto = np.asarray(prototypes, dtype=np.float64)
    if proto.shape != (num_classes, dim):
        raise ValueError(f"prototypes are {proto.shape}, expected ({num_classes}, {dim})")
    norms = np.linalg.norm(proto, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("prototype rows must have nonzero norm for prototype init")
    return HeadModel(W=config.proto_scale * proto / norms, b=np.zeros(num_classes))


def _backward(head: Head, X: np.ndarray, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients of the batch-mean loss given d(total_i)/d(logits_i) rows."""
    n = X.shape[0]
    G = grad_logits / n
    if isinstance(head, HeadModel):
        return {"W": G.T @ X, "b": G.sum(axis=0)}
    pre = X @ head.W1.T + head.b1
    hidden = np.maximum(pre, 0.0)
    dW2 = G.T @ hidden
    db2 = G.sum(axis=0)
    dhidden = G @ head.W2
    dpre = dhidden * (pre > 0)
    return {"W1": dpre.T @ X, "b1": dpre.sum(axis=0), "W2": dW2, "b2": db2}


def train(
    dataset: LabeledEmbeddings,
    prior: np.ndarray,
    targets_zs: Optional[np.ndarray],
    targets_llm: Optional[np.ndarray],
    config: TrainConfig,
    prototypes: Optional[np.ndarray] = None,
) -> TrainReport:
    """Run the full SGD loop and return the head plus loss history.

    ``targets_zs`` / ``targets_llm`` are (N, C) binary matrices aligned with
    the dataset rows; either may be None when its loss weight is zero.
    """
    start = time.perf_counter()
    n = dataset.num_samples
    num_classes = dataset.num_classes
    X = dataset.features.astype(np.float64)
    y = dataset.labels
    prior = np.asarray(prior, dtype=np.float64)
    for name, targets in (("targets_zs", targets_zs), ("targets_llm", targets_llm)):
        if targets is not None and targets.shape != (n, num_classes):
            raise ValueError(f"{name} shape {targets.shape} does not match ({n}, {num_classes})")

    head = init_head(dataset.dim, num_classes, config, prototypes)
    velocity = {name: np.zeros_like(arr) for name, arr, _ in head.params()}

    steps_per_epoch = math.ceil(n / config.batch_size)
    total_steps = max(1, config.epochs * steps_per_epoch)
    epoch_losses: list[dict] = []
    step = 0
    for epoch in range(config.epochs):
        perm = np.random.default_rng([config.seed, epoch]).permutation(n)
        sums = {"total": 0.0, "la": 0.0, "bla_zs": 0.0, "bla_llm": 0.0}
        for batch_start in range(0, n, config.batch_size):
            idx = perm[batch_start : batch_start + config.batch_size]
            logits = head.logits(X[idx])
            if not np.all(np.isfinite(logits)):
                raise TrainingDivergedError(step, float("nan"))
            means, grad_logits = cue_loss_batch(
                logits,
                y[idx],
                None if targets_zs is None else targets_zs[idx],
                None if targets_llm is None else targets_llm[idx],
                prior,
                config.loss,
            )
            if not math.isfinite(means["total"]):
                raise TrainingDivergedError(step, means["total"])
            for key in sums:
                sums[key] += means[key] * len(idx)

            lr = cosine_lr(config.lr0, step, total_steps)
            grads = _backward(head, X[idx], grad_logits)
            for name, arr, decay in head.params():
                wd = config.weight_decay if decay else 0.0
                new_arr, velocity[name] = sgd_step(arr, grads[name], velocity[name], lr, config.momentum, wd)
                setattr(head, name, new_arr)
            step += 1
        epoch_losses.append({key: sums[key] / n for key in sums})

    return TrainReport(
        epoch_losses=epoch_losses,
        model=head,
        wall_clock_seconds=time.perf_counter() - start,
        config_hash=config_hash(config),
        config=config,
    )


def predict(model: Head, embeddings: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties go to the smaller index."""
    return np.argmax(model.logits(np.asarray(embeddings)), axis=1)


def save_head(model_dir: str | Path, model: Head, extra_header: Optional[dict] = None) -> None:
    """Persist head weights as tensor files plus a small JSON header."""
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    names = [name for name, _, _ in model.params()]
    header = {
        "kind": "mlp" if isinstance(model, MlpHead) else "linear",
        "tensors": {name: f"{name}.cuet" for name in names},
    }
    if extra_header:
        header.update(extra_header)
    for name, arr, _ in model.params():
        matrix = arr if arr.ndim == 2 else arr.reshape(1, -1)
        tensorio.write_tensor(model_dir / f"{name}.cuet", matrix)
    (model_dir / "head.json").write_text(
        json.dumps(header, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_head(model_dir: str | Path) -> Head:
    model_dir = Path(model_dir)
    header = json.loads((model_dir / "head.json").read_text(encoding="utf-8"))
    tensors = {
        name: tensorio.read_tensor(model_dir / rel).astype(np.float64)
        for name, rel in header["tensors"].items()
    }
    if header["kind"] == "linear":
        return HeadModel(W=tensors["W"], b=tensors["b"][0])
    return MlpHead(W1=tensors["W1"], b1=tensors["b1"][0], W2=tensors["W2"], b2=tensors["b2"][0])
