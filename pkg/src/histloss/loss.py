"""Histogram cross-entropy loss, scalar baselines, and exact logit gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import BinGrid

__all__ = [
    "PredictionHistogram",
    "softmax",
    "log_softmax",
    "hl_loss",
    "hl_loss_rows",
    "hl_grad_logits",
    "entropy_floor",
    "entropy_rows",
    "l2_loss",
    "l2_grad",
    "l1_loss",
    "l1_subgradient",
    "l2_softmax_loss",
    "last_layer_grad_bound_check",
]


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Max-shifted softmax, safe for logits of magnitude ~1e3."""
    z = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = logits - np.max(logits, axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


@dataclass(frozen=True)
class PredictionHistogram:
    """Softmax output over the k bins together with its pre-activations."""

    logits: np.ndarray
    h: np.ndarray

    @classmethod
    def from_logits(cls, logits: np.ndarray) -> "PredictionHistogram":
        logits = np.asarray(logits, dtype=float)
        if logits.ndim != 1:
            raise ValueError(f"logits must be 1-D, got shape {logits.shape}")
        if not np.all(np.isfinite(logits)):
            raise ValueError("logits must be finite")
        return cls(logits=logits, h=softmax(logits))


def hl_loss(q: np.ndarray, pred: PredictionHistogram) -> float:
    """Cross-entropy -sum q_i log h_i, evaluated in log-sum-exp form."""
    return float(-(np.asarray(q, dtype=float) * log_softmax(pred.logits)).sum())


def hl_loss_rows(q_rows: np.ndarray, logits_rows: np.ndarray) -> np.ndarray:
    """Per-row histogram loss for a batch."""
    return -(q_rows * log_softmax(logits_rows, axis=1)).sum(axis=1)


def hl_grad_logits(q: np.ndarray, pred: PredictionHistogram) -> np.ndarray:
    """Gradient of hl_loss with respect to the logits: h - q."""
    return pred.h - np.asarray(q, dtype=float)


def entropy_floor(q: np.ndarray) -> float:
    """Minimum attainable histogram loss for weights q, i.e. H(q) in nats."""
    q = np.asarray(q, dtype=float)
    pos = q[q > 0]
    return float(-(pos * np.log(pos)).sum())


def entropy_rows(q_rows: np.ndarray) -> np.ndarray:
    safe = np.where(q_rows > 0, q_rows, 1.0)
    return -(np.where(q_rows > 0, q_rows * np.log(safe), 0.0)).sum(axis=1)


def l2_loss(pred: float, y: float) -> float:
    return (pred - y) ** 2


def l2_grad(pred: float, y: float) -> float:
    return 2.0 * (pred - y)


def l1_loss(pred: float, y: float) -> float:
    return abs(pred - y)


def l1_subgradient(pred: float, y: float) -> float:
    """sign(pred - y), 0 at the tie."""
    return float(np.sign(pred - y))


def l2_softmax_loss(
    grid: BinGrid, pred: PredictionHistogram, y: float
) -> tuple[float, np.ndarray]:
    """Squared error of the histogram mean, with its logit gradient.

    With m = sum h_i c_i, the loss is (m - y)^2 and the gradient with
    respect to logit j is 2 (m - y) h_j (c_j - m).
    """
    c = grid.centers
    m = float(np.dot(pred.h, c))
    loss = (m - y) ** 2
    grad = 2.0 * (m - y) * pred.h * (c - m)
    return loss, grad


def last_layer_grad_bound_check(
    q: np.ndarray, pred: PredictionHistogram, features: np.ndarray
) -> tuple[float, float]:
    """Both sides of the last-layer gradient-norm bound.

    lhs is the Euclidean norm of the histogram-loss gradient with respect
    to the stacked head weights (logits = W @ features); rhs is
    ||features|| * sum_i |q_i - h_i|. The contract is lhs <= rhs.
    """
    features = np.asarray(features, dtype=float)
    grad_w = np.outer(pred.h - np.asarray(q, dtype=float), features)
    lhs = float(np.linalg.norm(grad_w))
    rhs = float(np.linalg.norm(features) * np.abs(np.asarray(q) - pred.h).sum())
    return lhs, rhs
