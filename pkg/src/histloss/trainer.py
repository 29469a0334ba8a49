"""Deterministic mini-batch Adam training for histogram and baseline losses.

The loop is plain: per epoch, shuffle with a seeded rng, walk mini-batches,
turn the selected loss into per-head gradients at the head pre-activations,
backprop, and apply a bias-corrected Adam step. Histogram weight vectors
are precomputed for the whole training split and only recomputed when the
smoothing width changes under annealing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .grid import BinGrid, PaddingSpec, build_bin_grid
from .loss import entropy_rows, hl_loss_rows
from .net import HeadSpec, MlpModel, backward, forward, load_model
from .targets import TargetSpec, weight_matrix

__all__ = [
    "LOSS_KINDS",
    "AnnealSpec",
    "TrainConfig",
    "MetricsRecord",
    "AdamState",
    "adam_step",
    "anneal_sigma",
    "clip_global_norm",
    "global_grad_norm",
    "composite_loss_grads",
    "head_layout",
    "fit",
    "grad_norm_trace",
]

LOSS_KINDS = ("hl", "l2", "l1", "l2_softmax", "multitask", "moments")

# Loss kinds whose scalar targets are normalized to [0, 1] when the config
# flag is on; histogram losses never normalize (the grid handles scale).
_NORMALIZED_KINDS = ("l2", "l1", "multitask", "moments")
_GRID_KINDS = ("hl", "l2_softmax", "multitask")
_WEIGHTED_KINDS = ("hl", "multitask")


@dataclass(frozen=True)
class AnnealSpec:
    """Geometric decay of sigma (in bin widths) over the first fraction of
    epochs, constant afterwards."""

    sigma_final_w: float
    sigma_start_w: float = 8.0
    fraction: float = 0.2


@dataclass
class TrainConfig:
    loss: str = "hl"
    target: TargetSpec = field(default_factory=lambda: TargetSpec("gaussian"))
    k: int = 100
    padding: PaddingSpec = field(default_factory=lambda: PaddingSpec(2.0, 3.0))
    epochs: int = 100
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-7
    normalize_targets: bool = True
    target_noise_std: float = 0.0
    clip_threshold: float | None = None
    anneal: AnnealSpec | None = None
    multitask_coeff: float = 1.0
    n_moments: int = 2
    seed: int = 0
    freeze_trunk: bool = False
    load_trunk_from: str | None = None
    strict_targets: bool = True
    grid_range: tuple[float, float] | None = None

    def validate(self) -> None:
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss!r}, expected one of {LOSS_KINDS}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (self.learning_rate > 0):
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not (0.0 <= b < 1.0):
                raise ValueError(f"{name} must be in [0, 1), got {b}")
        if not (self.adam_eps > 0):
            raise ValueError(f"adam_eps must be > 0, got {self.adam_eps}")
        if self.target_noise_std < 0:
            raise ValueError(f"target_noise_std must be >= 0, got {self.target_noise_std}")
        if self.target_noise_std > 0 and self.loss != "l2":
            raise ValueError("target noise is the l2+noise augmentation; use loss='l2'")
        if self.clip_threshold is not None:
            if self.loss != "l2":
                raise ValueError("gradient clipping is the l2+clip augmentation; use loss='l2'")
            if not (self.clip_threshold > 0):
                raise ValueError(f"clip_threshold must be > 0, got {self.clip_threshold}")
        if self.anneal is not None:
            if self.target.kind != "gaussian" or self.loss not in _WEIGHTED_KINDS:
                raise ValueError("annealing requires gaussian targets on a histogram loss")
            a = self.anneal
            if not (a.sigma_start_w >= a.sigma_final_w > 0):
                raise ValueError(
                    f"need sigma_start_w >= sigma_final_w > 0, got "
                    f"{a.sigma_start_w}, {a.sigma_final_w}"
                )
            if not (0.0 < a.fraction <= 1.0):
                raise ValueError(f"anneal fraction must be in (0, 1], got {a.fraction}")
        if self.n_moments < 1:
            raise ValueError(f"n_moments must be >= 1, got {self.n_moments}")
        if self.multitask_coeff < 0:
            raise ValueError(f"multitask_coeff must be >= 0, got {self.multitask_coeff}")
        if self.grid_range is not None and not (self.grid_range[0] < self.grid_range[1]):
            raise ValueError(f"grid_range must be increasing, got {self.grid_range}")


@dataclass
class MetricsRecord:
    epoch: int
    train_mae: float
    train_rmse: float
    test_mae: float | None
    test_rmse: float | None
    loss: float
    grad_norm_normalized: float | None
    sigma: float | None

    def as_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_mae": self.train_mae,
            "train_rmse": self.train_rmse,
            "test_mae": self.test_mae,
            "test_rmse": self.test_rmse,
            "loss": self.loss,
            "grad_norm_normalized": self.grad_norm_normalized,
            "sigma": self.sigma,
        }


class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    def __init__(self, params: list[np.ndarray]):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-7,
    update_mask: list[bool] | None = None,
) -> None:
    """Standard bias-corrected Adam update, in place. Masked-out entries
    (frozen parameters) are left untouched."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads, and state must be aligned")
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(
                f"non-finite gradient in parameter {i} "
                f"({int(np.size(g) - np.isfinite(g).sum())} bad entries)"
            )
    beta1, beta2 = betas
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        if update_mask is not None and not update_mask[i]:
            continue
        m, v = state.m[i], state.v[i]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def anneal_sigma(
    epoch: int,
    total_epochs: int,
    sigma_start: float,
    sigma_final: float,
    fraction: float,
) -> float:
    """Sigma at a 0-based epoch: geometric decay over the first
    ceil(fraction * total) epochs, then exactly sigma_final."""
    if not (sigma_start >= sigma_final > 0):
        raise ValueError(f"need sigma_start >= sigma_final > 0, got {sigma_start}, {sigma_final}")
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if total_epochs < 1 or epoch < 0:
        raise ValueError(f"need total_epochs >= 1 and epoch >= 0, got {total_epochs}, {epoch}")
    n_anneal = math.ceil(fraction * total_epochs)
    if epoch >= n_anneal:
        return sigma_final
    tau = (sigma_final / sigma_start) ** (1.0 / n_anneal)
    return sigma_start * tau**epoch


def global_grad_norm(grads: list[np.ndarray]) -> float:
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads)))


def clip_global_norm(grads: list[np.ndarray], threshold: float) -> float:
    """Rescale the stacked gradient so its L2 norm is <= threshold, exactly.

    A single rescale can land a rounding error above the threshold, so
    repeat until the recomputed norm is within it.
    """
    if not (threshold > 0):
        raise ValueError(f"clip threshold must be > 0, got {threshold}")
    norm = global_grad_norm(grads)
    if not math.isfinite(norm):
        raise FloatingPointError(f"non-finite gradient norm {norm}")
    for _ in range(8):
        if norm <= threshold:
            return norm
        scale = threshold / norm
        for g in grads:
            g *= scale
        norm = global_grad_norm(grads)
    raise FloatingPointError(f"gradient norm {norm} failed to clip to {threshold}")


def head_layout(config: TrainConfig) -> list[HeadSpec]:
    """Heads a model must expose (as a prefix) for the configured loss."""
    if config.loss in ("hl", "l2_softmax"):
        return [HeadSpec.softmax(config.k)]
    if config.loss == "multitask":
        return [HeadSpec.scalar(), HeadSpec.softmax(config.k)]
    if config.loss == "moments":
        return [HeadSpec.scalar() for _ in range(config.n_moments)]
    return [HeadSpec.scalar()]


def composite_loss_grads(
    trace,
    targets: np.ndarray | None,
    config: TrainConfig,
    q_rows: np.ndarray | None = None,
    centers: np.ndarray | None = None,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Per-head gradients (of the batch-mean loss, at the pre-activations)
    and per-sample loss values.

    targets are the scalar targets the loss consumes (already normalized
    where that applies); histogram terms read q_rows instead. Heads beyond
    the ones the loss uses get zero gradients.
    """
    kind = config.loss
    n = trace.n
    n_heads = len(trace.head_logits)
    grads: list[np.ndarray | None] = [None] * n_heads

    if kind == "hl":
        if q_rows is None:
            raise ValueError("hl needs precomputed weight rows")
        losses = hl_loss_rows(q_rows, trace.head_logits[0])
        grads[0] = (trace.probs(0) - q_rows) / n
    elif kind == "l2":
        r = trace.scalar_out(0) - targets
        losses = r * r
        grads[0] = 2.0 * r / n
    elif kind == "l1":
        r = trace.scalar_out(0) - targets
        losses = np.abs(r)
        grads[0] = np.sign(r) / n
    elif kind == "l2_softmax":
        if centers is None:
            raise ValueError("l2_softmax needs bin centers")
        h = trace.probs(0)
        m = h @ centers
        r = m - targets
        losses = r * r
        grads[0] = (2.0 * r / n)[:, None] * h * (centers[None, :] - m[:, None])
    elif kind == "multitask":
        if q_rows is None:
            raise ValueError("multitask needs precomputed weight rows")
        lam = config.multitask_coeff
        r = trace.scalar_out(0) - targets
        losses = r * r + lam * hl_loss_rows(q_rows, trace.head_logits[1])
        grads[0] = 2.0 * r / n
        grads[1] = lam * (trace.probs(1) - q_rows) / n
    elif kind == "moments":
        losses = np.zeros(n)
        for mth in range(1, config.n_moments + 1):
            r = trace.scalar_out(mth - 1) - targets**mth
            losses = losses + r * r
            grads[mth - 1] = 2.0 * r / n
    else:
        raise ValueError(f"unknown loss kind {kind!r}")

    for i, g in enumerate(grads):
        if g is None:
            p = trace.head_probs[i]
            grads[i] = np.zeros(trace.head_logits[i].shape if p is not None else (n,))
    return grads, losses


def _predictions(trace, kind: str, centers, tmin: float, scale: float, normalized: bool) -> np.ndarray:
    """Primary-head predictions in raw target units."""
    if kind in ("hl", "l2_softmax"):
        return trace.probs(0) @ centers
    out = trace.scalar_out(0)
    return out * scale + tmin if normalized else out


def _errors(pred: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    diff = pred - y
    return float(np.mean(np.abs(diff))), float(np.sqrt(np.mean(diff * diff)))


def fit(
    model: MlpModel,
    dataset: Dataset,
    config: TrainConfig,
    step_hook=None,
) -> tuple[MlpModel, list[MetricsRecord]]:
    """Train the model per the config; returns it with per-epoch metrics.

    step_hook, if given, is called as step_hook(epoch, step, grads) after
    clipping and before the Adam update.
    """
    config.validate()
    x_train, y_train = dataset.train_arrays()
    if dataset.test_idx is not None and len(dataset.test_idx) > 0:
        x_test, y_test = dataset.test_arrays()
    else:
        x_test = y_test = None
    if config.epochs == 0:
        return model, []

    kind = config.loss
    expected = head_layout(config)
    if model.heads[: len(expected)] != expected:
        raise ValueError(
            f"model heads {model.heads} do not start with the layout {expected} "
            f"required by loss {kind!r}"
        )
    if config.load_trunk_from is not None:
        model.load_trunk(load_model(config.load_trunk_from))
    if config.freeze_trunk:
        model.freeze_trunk()

    if config.grid_range is not None:
        tmin, tmax = map(float, config.grid_range)
    else:
        tmin = dataset.target_min if dataset.target_min is not None else float(y_train.min())
        tmax = dataset.target_max if dataset.target_max is not None else float(y_train.max())
    scale = tmax - tmin
    if scale <= 0:
        raise ValueError(f"degenerate target range [{tmin}, {tmax}]")

    grid = build_bin_grid(tmin, tmax, config.k, config.padding) if kind in _GRID_KINDS else None
    centers = grid.centers if grid is not None else None
    if grid is not None and config.strict_targets:
        out = (y_train < grid.a) | (y_train > grid.b)
        if np.any(out):
            raise ValueError(
                f"{int(out.sum())} training target(s) outside the grid support "
                f"[{grid.a}, {grid.b}], e.g. y={y_train[out][0]}; widen grid_range "
                "or padding, or disable strict_targets"
            )
    normalized = config.normalize_targets and kind in _NORMALIZED_KINDS
    t_train = (y_train - tmin) / scale if normalized else y_train

    total = config.epochs
    sigma_cur: float | None = None
    q_train: np.ndarray | None = None
    floor = 0.0
    if kind in _WEIGHTED_KINDS:
        if config.target.kind == "gaussian":
            if config.anneal is not None:
                sigma_cur = anneal_sigma(
                    0, total, config.anneal.sigma_start_w * grid.w,
                    config.anneal.sigma_final_w * grid.w, config.anneal.fraction,
                )
            else:
                sigma_cur = config.target.resolve_sigma(grid)
            q_train = weight_matrix(grid, y_train, config.target, sigma=sigma_cur,
                                    strict=config.strict_targets)
        else:
            q_train = weight_matrix(grid, y_train, config.target, strict=config.strict_targets)
        if kind == "hl":
            floor = float(entropy_rows(q_train).mean())

    ss = np.random.SeedSequence(config.seed)
    shuffle_rng, noise_rng, dropout_rng = (np.random.default_rng(c) for c in ss.spawn(3))
    params = model.parameters()
    state = AdamState(params)
    mask = model.trainable_mask()
    n = len(y_train)
    batch = min(config.batch_size, n)

    def scalar_targets(idx, t_vec):
        if kind == "hl":
            return None
        if kind == "l2_softmax":
            return y_train[idx]
        return t_vec[idx]

    records: list[MetricsRecord] = []
    for epoch in range(1, total + 1):
        if config.anneal is not None:
            sigma_new = anneal_sigma(
                epoch - 1, total, config.anneal.sigma_start_w * grid.w,
                config.anneal.sigma_final_w * grid.w, config.anneal.fraction,
            )
            if sigma_new != sigma_cur:
                sigma_cur = sigma_new
                q_train = weight_matrix(grid, y_train, config.target, sigma=sigma_cur,
                                        strict=config.strict_targets)
                if kind == "hl":
                    floor = float(entropy_rows(q_train).mean())
        t_used = t_train
        if config.target_noise_std > 0:
            t_used = t_train + noise_rng.normal(0.0, config.target_noise_std, size=n)

        perm = shuffle_rng.permutation(n)
        for step, start in enumerate(range(0, n, batch)):
            idx = perm[start : start + batch]
            trace = forward(model, x_train[idx], train_mode=True, rng=dropout_rng)
            head_grads, _ = composite_loss_grads(
                trace, scalar_targets(idx, t_used), config,
                q_rows=q_train[idx] if q_train is not None else None, centers=centers,
            )
            grads = backward(model, trace, head_grads).arrays
            if config.clip_threshold is not None:
                clip_global_norm(grads, config.clip_threshold)
            if step_hook is not None:
                step_hook(epoch, step, grads)
            adam_step(params, grads, state, config.learning_rate,
                      (config.beta1, config.beta2), config.adam_eps, mask)
            model.bump_version()

        records.append(
            _epoch_metrics(
                model, config, epoch, x_train, y_train, t_train, x_test, y_test,
                q_train, centers, tmin, scale, normalized, floor, sigma_cur,
            )
        )
    return model, records


def _epoch_metrics(
    model, config, epoch, x_train, y_train, t_train, x_test, y_test,
    q_train, centers, tmin, scale, normalized, floor, sigma_cur,
) -> MetricsRecord:
    kind = config.loss
    trace = forward(model, x_train)
    all_idx = slice(None)
    head_grads, losses = composite_loss_grads(
        trace, None if kind == "hl" else (y_train if kind == "l2_softmax" else t_train),
        config, q_rows=q_train[all_idx] if q_train is not None else None, centers=centers,
    )
    mean_loss = float(losses.mean())
    if not math.isfinite(mean_loss):
        raise FloatingPointError(f"non-finite training loss {mean_loss} at epoch {epoch}")
    gnorm = global_grad_norm(backward(model, trace, head_grads).arrays)
    denom = mean_loss - floor
    gnn = gnorm / denom if denom > 1e-12 else None

    train_mae, train_rmse = _errors(_predictions(trace, kind, centers, tmin, scale, normalized), y_train)
    test_mae = test_rmse = None
    if x_test is not None:
        te_trace = forward(model, x_test)
        test_mae, test_rmse = _errors(
            _predictions(te_trace, kind, centers, tmin, scale, normalized), y_test
        )
    return MetricsRecord(
        epoch=epoch, train_mae=train_mae, train_rmse=train_rmse,
        test_mae=test_mae, test_rmse=test_rmse, loss=mean_loss,
        grad_norm_normalized=gnn, sigma=sigma_cur,
    )


def grad_norm_trace(
    model: MlpModel, dataset: Dataset, config: TrainConfig
) -> list[tuple[int, float | None]]:
    """Per-epoch gradient norms normalized by (loss - floor), where the
    floor is the mean target entropy for the histogram loss and 0 for l2.
    Entries where the denominator vanished are None."""
    if config.loss not in ("hl", "l2"):
        raise ValueError(f"gradient-norm traces are defined for hl or l2, got {config.loss!r}")
    _, records = fit(model, dataset, config)
    return [(r.epoch, r.grad_norm_normalized) for r in records]
