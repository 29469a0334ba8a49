"""Stand-alone verifications: bias simulation sweeps, the half-bin-width
bias bound, the prediction-error bound, target corruption, and input
sensitivity reports.

The discrete mean of a truncated Gaussian smoothed label is

    yhat = sum_i c_i (erf((c_i + w/2 - y) / (sqrt(2) s)) - erf((c_i - w/2 - y) / (sqrt(2) s)))
           / (erf((b - y) / (sqrt(2) s)) - erf((a - y) / (sqrt(2) s)))

and yhat - y, in units of the bin width, is the bias a perfectly fitted
histogram head would carry. Sweeps report its mean absolute value over
equispaced labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .grid import BinGrid, PaddingSpec, build_bin_grid
from .net import MlpModel, input_gradients

__all__ = [
    "BiasSweepResult",
    "truncated_discrete_mean",
    "bias_sweep_sigma",
    "bias_sweep_padding",
    "half_width_bias_bound_check",
    "prediction_bound_check",
    "corrupt_targets",
    "sensitivity_report",
]

_SQRT2 = math.sqrt(2.0)
_MIN_MASS = 2e-300


@dataclass
class BiasSweepResult:
    """One row per swept value: the axis value, the mean absolute bias in
    bin widths, and the per-sample (offset, bias) pairs behind it."""

    axis: np.ndarray            # swept parameter values
    mean_abs_bias: np.ndarray   # per axis value, bin-width units
    offsets: np.ndarray         # (len(axis), n_points), offset from bin center in w
    biases: np.ndarray          # (len(axis), n_points), signed bias in w


def _discrete_means(
    a: float, b: float, w: float, n_bins: int, ys: np.ndarray, sigma: float
) -> np.ndarray:
    """Vectorized truncated-Gaussian discrete means over a uniform grid.

    Only bins within ~12 sigma of each label are summed; beyond that the
    erf increments underflow to exactly zero, so the window changes nothing.
    """
    ys = np.asarray(ys, dtype=float)
    denom = erf((b - ys) / (_SQRT2 * sigma)) - erf((a - ys) / (_SQRT2 * sigma))
    if np.any(denom < _MIN_MASS):
        bad = ys[denom < _MIN_MASS].flat[0]
        raise ValueError(
            f"truncation mass underflow for y={bad}, sigma={sigma} on [{a}, {b}]"
        )
    half = int(np.ceil(12.0 * sigma / w)) + 1
    if 2 * half + 1 >= n_bins:
        idx = np.broadcast_to(np.arange(n_bins), (ys.size, n_bins))
        valid = np.ones(idx.shape, dtype=bool)
    else:
        base = np.floor((ys - a) / w).astype(np.int64)
        idx = base[:, None] + np.arange(-half, half + 1)[None, :]
        valid = (idx >= 0) & (idx < n_bins)
        idx = np.clip(idx, 0, n_bins - 1)
    centers = a + (idx + 0.5) * w
    upper = erf((centers + 0.5 * w - ys[:, None]) / (_SQRT2 * sigma))
    lower = erf((centers - 0.5 * w - ys[:, None]) / (_SQRT2 * sigma))
    mass = np.where(valid, upper - lower, 0.0)
    return (centers * mass).sum(axis=1) / denom


def truncated_discrete_mean(grid: BinGrid, y: float, sigma: float) -> float:
    """Mean of the best-fit histogram for a Gaussian at y truncated to the
    grid support."""
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError(f"sigma must be finite and > 0, got {sigma}")
    c = grid.centers
    upper = erf((c + 0.5 * grid.w - y) / (_SQRT2 * sigma))
    lower = erf((c - 0.5 * grid.w - y) / (_SQRT2 * sigma))
    denom = erf((grid.b - y) / (_SQRT2 * sigma)) - erf((grid.a - y) / (_SQRT2 * sigma))
    if denom < _MIN_MASS:
        raise ValueError(
            f"truncation mass underflow for y={y}, sigma={sigma} on "
            f"[{grid.a}, {grid.b}]"
        )
    return float((c * (upper - lower)).sum() / denom)


def _offsets(a: float, w: float, ys: np.ndarray) -> np.ndarray:
    nearest = a + (np.floor((ys - a) / w) + 0.5) * w
    return (ys - nearest) / w


def bias_sweep_sigma(
    k: int,
    n_points: int,
    sigma_w_values,
    psi: float = 100.0,
) -> BiasSweepResult:
    """Discretization bias versus sigma_w.

    The unit range [0, 1] is cut into k bins; padding of psi target units
    per side (huge by default) makes truncation negligible, isolating the
    discretization term. Reported biases are in bin widths.
    """
    if n_points < 100:
        raise ValueError(f"n_points must be >= 100, got {n_points}")
    if psi <= 0:
        raise ValueError(f"psi must be > 0, got {psi}")
    w = 1.0 / k
    pad_bins = int(round(psi / w))
    n_bins = k + 2 * pad_bins
    a = -pad_bins * w
    b = a + n_bins * w
    ys = np.linspace(0.0, 1.0, n_points)
    sigma_w_values = np.asarray(sigma_w_values, dtype=float)
    offsets = np.empty((sigma_w_values.size, n_points))
    biases = np.empty_like(offsets)
    for i, sigma_w in enumerate(sigma_w_values):
        yhat = _discrete_means(a, b, w, n_bins, ys, sigma_w * w)
        offsets[i] = _offsets(a, w, ys)
        biases[i] = (yhat - ys) / w
    return BiasSweepResult(
        axis=sigma_w_values,
        mean_abs_bias=np.abs(biases).mean(axis=1),
        offsets=offsets,
        biases=biases,
    )


def bias_sweep_padding(
    k: int,
    n_points: int,
    sigma_w: float = 2.0,
    psi_sigma_values=(0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0),
) -> BiasSweepResult:
    """Total bias (discretization plus truncation) versus psi_sigma, with
    the grid rebuilt per value so padding eats into the bin budget."""
    if n_points < 100:
        raise ValueError(f"n_points must be >= 100, got {n_points}")
    ys = np.linspace(0.0, 1.0, n_points)
    psi_sigma_values = np.asarray(psi_sigma_values, dtype=float)
    offsets = np.empty((psi_sigma_values.size, n_points))
    biases = np.empty_like(offsets)
    for i, psi_sigma in enumerate(psi_sigma_values):
        grid = build_bin_grid(0.0, 1.0, k, PaddingSpec(sigma_w, psi_sigma))
        yhat = _discrete_means(grid.a, grid.b, grid.w, grid.k, ys, grid.sigma)
        offsets[i] = _offsets(grid.a, grid.w, ys)
        biases[i] = (yhat - ys) / grid.w
    return BiasSweepResult(
        axis=psi_sigma_values,
        mean_abs_bias=np.abs(biases).mean(axis=1),
        offsets=offsets,
        biases=biases,
    )


def half_width_bias_bound_check(
    k: int = 100,
    sigma_w_values=None,
    offset_values=None,
    psi_sigma: float = 12.0,
) -> float:
    """Max |yhat - y| in bin widths over a (sigma_w, offset) grid.

    Offsets are measured from a mid-support bin center in units of w.
    The contract is a bound of 1/2; the max approaches it as sigma_w -> 0
    and the offset approaches +/- 1/2 from inside (at exactly +/- w/2 the
    Gaussian straddles a bin edge symmetrically and the bias cancels).
    """
    if psi_sigma < 10:
        raise ValueError(f"need psi_sigma >= 10 so truncation is negligible, got {psi_sigma}")
    if sigma_w_values is None:
        sigma_w_values = np.linspace(0.01, 4.0, 50)
    if offset_values is None:
        offset_values = np.linspace(-0.5, 0.5, 50)
    offset_values = np.asarray(offset_values, dtype=float)
    max_abs = 0.0
    for sigma_w in np.asarray(sigma_w_values, dtype=float):
        grid = build_bin_grid(0.0, 1.0, k, PaddingSpec(sigma_w, psi_sigma))
        mid_center = grid.a + (grid.k // 2 + 0.5) * grid.w
        ys = mid_center + offset_values * grid.w
        yhat = _discrete_means(grid.a, grid.b, grid.w, grid.k, ys, grid.sigma)
        max_abs = max(max_abs, float(np.abs((yhat - ys) / grid.w).max()))
    return max_abs


def prediction_bound_check(grid: BinGrid, pairs) -> int:
    """Count violations of the mean-gap bound

        (mean(q) - mean(h))^2 <= 4 max(|a|, |b|)^2 min(KL/2, 1 - exp(-KL))

    over (q, h) pairs of bin-mass vectors on the grid. KL uses 0 log 0 = 0
    and is +inf where q puts mass on an empty h bin (the bound then holds
    trivially). The contract is zero violations.
    """
    c = grid.centers
    bound_scale = 4.0 * max(abs(grid.a), abs(grid.b)) ** 2
    violations = 0
    for q, h in pairs:
        q = np.asarray(q, dtype=float)
        h = np.asarray(h, dtype=float)
        gap = float(np.dot(q - h, c))
        pos = q > 0
        if np.any(h[pos] == 0.0):
            kl = math.inf
        else:
            kl = float(np.sum(q[pos] * np.log(q[pos] / h[pos])))
        rhs = bound_scale * min(0.5 * kl, 1.0 - math.exp(-kl))
        if gap * gap > rhs:
            violations += 1
    return violations


def corrupt_targets(targets: np.ndarray, ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Replace round(ratio * n) targets, chosen without replacement, with
    uniform draws from the original target range."""
    if not (0.0 <= ratio <= 1.0):
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    targets = np.asarray(targets, dtype=float)
    out = targets.copy()
    n_replace = int(round(ratio * targets.size))
    if n_replace == 0:
        return out
    idx = rng.choice(targets.size, size=n_replace, replace=False)
    out[idx] = rng.uniform(targets.min(), targets.max(), size=n_replace)
    return out


def sensitivity_report(
    model: MlpModel, inputs: np.ndarray, centers: np.ndarray | None = None
) -> float:
    """Mean Frobenius norm of d(prediction)/d(input) over the given points."""
    grads = input_gradients(model, np.asarray(inputs, dtype=float), centers=centers)
    return float(np.linalg.norm(grads, axis=1).mean())
