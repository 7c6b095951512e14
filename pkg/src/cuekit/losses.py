"""Logit-adjusted losses with analytic gradients.

Three objectives over a logit vector theta(x):

* ``la_loss`` -- single-label softmax cross-entropy after shifting logits by
  ``tau * log(pi)``.
* ``bla_loss`` -- per-class binary cross-entropy after the same shift with
  temperature ``tau_b``, averaged over classes.
* ``cue_loss`` -- the LA term plus two weighted BLA terms, one for the
  instance-level (zero-shot) targets and one for the class-level (neighbor
  graph) targets.

Each function returns the loss together with its gradient with respect to
the logits.  Batch variants take row-stacked inputs; the batch loss is the
mean of per-sample losses and the batch gradient the mean of per-sample
gradients.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit


@dataclass
class LossConfig:
    """Temperatures and cue weights for the combined objective."""

    tau: float = 1.0
    tau_b: float = 1.0
    lambda_zs: float = 0.5
    lambda_llm: float = 0.5

    def __post_init__(self) -> None:
        if not np.isfinite(self.tau) or not np.isfinite(self.tau_b):
            raise ValueError("temperatures must be finite")
        if self.lambda_zs < 0 or self.lambda_llm < 0:
            raise ValueError("cue weights must be >= 0")

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "tau_b": self.tau_b,
            "lambda_zs": self.lambda_zs,
            "lambda_llm": self.lambda_llm,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LossConfig":
        return cls(**{k: float(doc[k]) for k in ("tau", "tau_b", "lambda_zs", "lambda_llm")})


@dataclass
class LossValue:
    """Decomposed loss plus the gradient with respect to the logits."""

    total: float
    la: float
    bla_zs: float
    bla_llm: float
    grad: np.ndarray


def _check_logits(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits contain non-finite values")
    return logits


def _check_prior(pi: np.ndarray, num_classes: int) -> np.ndarray:
    pi = np.asarray(pi, dtype=np.float64)
    if pi.shape != (num_classes,):
        raise ValueError(f"prior has shape {pi.shape}, expected ({num_classes},)")
    if np.any(pi <= 0):
        raise ValueError("prior must be strictly positive for every class")
    return pi


def la_loss(
    logits: np.ndarray, y: int, pi: np.ndarray, tau: float = 1.0
) -> tuple[float, np.ndarray]:
    """Logit-adjusted cross-entropy for one sample.

    Shifted logits are ``theta + tau * log(pi)``; the loss is the negative
    log-softmax at the ground-truth index, computed with max subtraction.
    """
    logits = _check_logits(logits)
    pi = _check_prior(pi, logits.shape[0])
    shifted = logits + tau * np.log(pi)
    m = shifted.max()
    z = shifted - m
    logsumexp = m + np.log(np.exp(z).sum())
    loss = logsumexp - shifted[y]
    grad = np.exp(shifted - logsumexp)
    grad[y] -= 1.0
    return float(loss), grad


def bla_loss(
    logits: np.ndarray, target: np.ndarray, pi: np.ndarray, tau_b: float = 1.0
) -> tuple[float, np.ndarray]:
    """Binary logit-adjusted cross-entropy for one sample, averaged over classes.

    Uses the softplus identities log(sigmoid(z)) = -softplus(-z) and
    log(1 - sigmoid(z)) = -softplus(z) for numerical stability.
    """
    logits = _check_logits(logits)
    num_classes = logits.shape[0]
    pi = _check_prior(pi, num_classes)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (num_classes,):
        raise ValueError(f"target has shape {target.shape}, expected ({num_classes},)")
    if not np.all((target == 0) | (target == 1)):
        raise ValueError("target must be binary")
    shifted = logits + tau_b * np.log(pi)
    # softplus(z) == logaddexp(0, z), stable for large |z|
    per_class = target * np.logaddexp(0.0, -shifted) + (1.0 - target) * np.logaddexp(0.0, shifted)
    loss = per_class.sum() / num_classes
    grad = (expit(shifted) - target) / num_classes
    return float(loss), grad


def cue_loss(
    logits: np.ndarray,
    y: int,
    t_zs: Optional[np.ndarray],
    t_llm: Optional[np.ndarray],
    pi: np.ndarray,
    config: LossConfig,
) -> LossValue:
    """Combined objective: LA plus weighted BLA terms for both cue kinds.

    A target may be None only when its weight is zero, in which case that
    component is reported as 0.
    """
    la, grad = la_loss(logits, y, pi, config.tau)
    bla_zs = 0.0
    bla_llm = 0.0
    if t_zs is not None:
        bla_zs, g = bla_loss(logits, t_zs, pi, config.tau_b)
        grad = grad + config.lambda_zs * g
    elif config.lambda_zs != 0:
        raise ValueError("lambda_zs is nonzero but no zero-shot targets were given")
    if t_llm is not None:
        bla_llm, g = bla_loss(logits, t_llm, pi, config.tau_b)
        grad = grad + config.lambda_llm * g
    elif config.lambda_llm != 0:
        raise ValueError("lambda_llm is nonzero but no neighbor targets were given")
    total = la + config.lambda_zs * bla_zs + config.lambda_llm * bla_llm
    return LossValue(total=float(total), la=la, bla_zs=bla_zs, bla_llm=bla_llm, grad=grad)


def la_loss_batch(
    logits: np.ndarray, y: np.ndarray, pi: np.ndarray, tau: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise LA loss: per-sample losses (N,) and gradients (N, C)."""
    logits = _check_logits(logits)
    n, num_classes = logits.shape
    pi = _check_prior(pi, num_classes)
    y = np.asarray(y)
    shifted = logits + tau * np.log(pi)[None, :]
    m = shifted.max(axis=1, keepdims=True)
    z = shifted - m
    logsumexp = m[:, 0] + np.log(np.exp(z).sum(axis=1))
    losses = logsumexp - shifted[np.arange(n), y]
    grads = np.exp(shifted - logsumexp[:, None])
    grads[np.arange(n), y] -= 1.0
    return losses, grads


def bla_loss_batch(
    logits: np.ndarray, targets: np.ndarray, pi: np.ndarray, tau_b: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise BLA loss: per-sample losses (N,) and gradients (N, C)."""
    logits = _check_logits(logits)
    n, num_classes = logits.shape
    pi = _check_prior(pi, num_classes)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != (n, num_classes):
        raise ValueError(f"targets have shape {targets.shape}, expected {(n, num_classes)}")
    shifted = logits + tau_b * np.log(pi)[None, :]
    per_class = targets * np.logaddexp(0.0, -shifted) + (1.0 - targets) * np.logaddexp(0.0, shifted)
    losses = per_class.sum(axis=1) / num_classes
    grads = (expit(shifted) - targets) / num_classes
    return losses, grads


def cue_loss_batch(
    logits: np.ndarray,
    y: np.ndarray,
    t_zs: Optional[np.ndarray],
    t_llm: Optional[np.ndarray],
    pi: np.ndarray,
    config: LossConfig,
) -> tuple[dict, np.ndarray]:
    """Batch objective: mean component losses and per-sample gradients (N, C).

    The returned gradient rows are d(per-sample total)/d(logits); divide by N
    (or average) to get the gradient of the batch mean.
    """
    la, grads = la_loss_batch(logits, y, pi, config.tau)
    bla_zs = np.zeros_like(la)
    bla_llm = np.zeros_like(la)
    if t_zs is not None:
        bla_zs, g = bla_loss_batch(logits, t_zs, pi, config.tau_b)
        grads = grads + config.lambda_zs * g
    elif config.lambda_zs != 0:
        raise ValueError("lambda_zs is nonzero but no zero-shot targets were given")
    if t_llm is not None:
        bla_llm, g = bla_loss_batch(logits, t_llm, pi, config.tau_b)
        grads = grads + config.lambda_llm * g
    elif config.lambda_llm != 0:
        raise ValueError("lambda_llm is nonzero but no neighbor targets were given")
    totals = la + config.lambda_zs * bla_zs + config.lambda_llm * bla_llm
    means = {
        "total": float(totals.mean()),
        "la": float(la.mean()),
        "bla_zs": float(bla_zs.mean()),
        "bla_llm": float(bla_llm.mean()),
    }
    return means, grads
