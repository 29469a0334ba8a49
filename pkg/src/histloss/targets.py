"""Target weight vectors: per-sample distributions over the bins of a grid.

Each constructor converts a scalar label y into a length-k probability
vector q (nonnegative, summing to 1). The truncated-Gaussian weights are
CDF increments,

    q_i = (erf((l_i + w - y) / (sqrt(2) sigma)) - erf((l_i - y) / (sqrt(2) sigma))) / (2 Z)

with Z the truncation mass over [a, b], so the sum telescopes to 1.
Weight vectors are meant to be precomputed once per sample before training.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .grid import BinGrid, bin_index, bin_indices

__all__ = [
    "TargetSpec",
    "gaussian_weights",
    "onebin_weights",
    "uniform_mix_weights",
    "projected_weights",
    "weight_matrix",
    "target_mean",
    "target_mean_bias",
]

_SQRT2 = math.sqrt(2.0)
# Below this truncation mass the normalization is meaningless noise.
_MIN_MASS = 2e-300

TARGET_KINDS = ("gaussian", "onebin", "uniform_mix", "projected")


@dataclass(frozen=True)
class TargetSpec:
    """Which target construction to use and its parameters.

    For gaussian targets, sigma is in target units; sigma_w is in bin widths
    and is resolved against a grid. If neither is given, sigma_w defaults
    to 2 bin widths.
    """

    kind: str
    sigma: float | None = None
    sigma_w: float | None = None
    epsilon: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in TARGET_KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}, expected one of {TARGET_KINDS}")
        if self.kind != "gaussian" and (self.sigma is not None or self.sigma_w is not None):
            raise ValueError(f"sigma/sigma_w only apply to gaussian targets, not {self.kind!r}")
        if self.kind == "gaussian" and self.sigma is not None and self.sigma_w is not None:
            raise ValueError("give sigma or sigma_w, not both")
        if self.kind != "uniform_mix" and self.epsilon is not None:
            raise ValueError(f"epsilon only applies to uniform_mix targets, not {self.kind!r}")
        if self.kind == "uniform_mix" and self.epsilon is None:
            raise ValueError("uniform_mix targets require epsilon")

    def resolve_sigma(self, grid: BinGrid) -> float:
        if self.kind != "gaussian":
            raise ValueError(f"{self.kind!r} targets have no sigma")
        if self.sigma is not None:
            return self.sigma
        sigma_w = 2.0 if self.sigma_w is None else self.sigma_w
        return sigma_w * grid.w


def _check_sigma(sigma: float) -> None:
    if not (math.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be finite and > 0, got {sigma}")


def gaussian_weights(grid: BinGrid, y: float, sigma: float) -> np.ndarray:
    """Bin masses of a Gaussian centered at y, truncated to [a, b]."""
    _check_sigma(sigma)
    z = erf((grid.edges - y) / (_SQRT2 * sigma))
    mass = z[-1] - z[0]  # 2Z
    if mass < _MIN_MASS:
        raise ValueError(
            f"truncation mass underflow for y={y}, sigma={sigma} on support "
            f"[{grid.a}, {grid.b}]; increase padding (psi_sigma) or sigma"
        )
    return np.diff(z) / mass


def _gaussian_matrix(grid: BinGrid, ys: np.ndarray, sigma: float) -> np.ndarray:
    _check_sigma(sigma)
    z = erf((grid.edges[None, :] - ys[:, None]) / (_SQRT2 * sigma))
    mass = z[:, -1] - z[:, 0]
    if np.any(mass < _MIN_MASS):
        bad = ys[mass < _MIN_MASS].flat[0]
        raise ValueError(
            f"truncation mass underflow for y={bad}, sigma={sigma} on support "
            f"[{grid.a}, {grid.b}]; increase padding (psi_sigma) or sigma"
        )
    return np.diff(z, axis=1) / mass[:, None]


def _clamped_indices(grid: BinGrid, ys: np.ndarray, strict: bool, what: str) -> np.ndarray:
    """bin indices with strict out-of-support errors or lenient edge clamping."""
    if strict:
        return bin_indices(grid, ys)
    ys = np.asarray(ys, dtype=float)
    out = (ys < grid.a) | (ys > grid.b)
    if np.any(out):
        warnings.warn(
            f"{int(out.sum())} {what} target(s) outside [{grid.a}, {grid.b}] "
            "clamped to the edge bins",
            stacklevel=3,
        )
    clamped = np.clip(ys, grid.a, grid.b)
    return bin_indices(grid, clamped)


def onebin_weights(grid: BinGrid, y: float, strict: bool = True) -> np.ndarray:
    """One-hot weights at the bin containing y."""
    idx = _clamped_indices(grid, np.asarray([y], dtype=float), strict, "onebin")[0]
    q = np.zeros(grid.k)
    q[idx] = 1.0
    return q


def uniform_mix_weights(grid: BinGrid, y: float, epsilon: float, strict: bool = True) -> np.ndarray:
    """One-hot at y's bin mixed with epsilon mass on every other bin."""
    if not (0.0 <= epsilon <= 1.0 / grid.k):
        raise ValueError(f"epsilon must be in [0, 1/k] = [0, {1.0 / grid.k}], got {epsilon}")
    idx = _clamped_indices(grid, np.asarray([y], dtype=float), strict, "uniform_mix")[0]
    q = np.full(grid.k, epsilon)
    q[idx] = 1.0 - (grid.k - 1) * epsilon
    return q


def projected_weights(grid: BinGrid, y: float, strict: bool = True) -> np.ndarray:
    """Split mass between the two bin centers bracketing y so that the
    weighted mean equals y exactly."""
    return _projected_matrix(grid, np.asarray([y], dtype=float), strict)[0]


def _projected_matrix(grid: BinGrid, ys: np.ndarray, strict: bool = True) -> np.ndarray:
    ys = np.asarray(ys, dtype=float)
    c = grid.centers
    out = (ys < c[0]) | (ys > c[-1])
    if np.any(out):
        if strict:
            first = ys[out].flat[0]
            raise ValueError(
                f"{int(out.sum())} target(s) outside the center range "
                f"[{c[0]}, {c[-1]}], e.g. y={first}; projected weights cannot "
                "preserve their mean"
            )
        warnings.warn(
            f"{int(out.sum())} projected target(s) outside [{c[0]}, {c[-1]}] "
            "collapsed to the edge bin; mean preservation is violated for them",
            stacklevel=2,
        )
        ys = np.clip(ys, c[0], c[-1])
    pos = (ys - c[0]) / grid.w
    lo = np.clip(np.floor(pos).astype(np.int64), 0, grid.k - 2)
    # rounding can push the fraction a hair outside [0, 1] at the centers
    frac = np.clip((ys - c[lo]) / grid.w, 0.0, 1.0)
    q = np.zeros((ys.size, grid.k))
    rows = np.arange(ys.size)
    q[rows, lo] = 1.0 - frac
    q[rows, lo + 1] = frac
    return q


def weight_matrix(
    grid: BinGrid,
    ys: np.ndarray,
    spec: TargetSpec,
    sigma: float | None = None,
    strict: bool = True,
) -> np.ndarray:
    """Stack of weight vectors, one row per target. sigma overrides the
    spec's smoothing width (used by annealing schedules)."""
    ys = np.asarray(ys, dtype=float)
    if spec.kind == "gaussian":
        return _gaussian_matrix(grid, ys, spec.resolve_sigma(grid) if sigma is None else sigma)
    if spec.kind == "onebin":
        idx = _clamped_indices(grid, ys, strict, "onebin")
        q = np.zeros((ys.size, grid.k))
        q[np.arange(ys.size), idx] = 1.0
        return q
    if spec.kind == "uniform_mix":
        eps = spec.epsilon
        if not (0.0 <= eps <= 1.0 / grid.k):
            raise ValueError(f"epsilon must be in [0, 1/k] = [0, {1.0 / grid.k}], got {eps}")
        idx = _clamped_indices(grid, ys, strict, "uniform_mix")
        q = np.full((ys.size, grid.k), eps)
        q[np.arange(ys.size), idx] = 1.0 - (grid.k - 1) * eps
        return q
    return _projected_matrix(grid, ys, strict)


def target_mean(grid: BinGrid, q: np.ndarray) -> float:
    """Mean of the histogram with bin masses q."""
    return float(np.dot(np.asarray(q, dtype=float), grid.centers))


def target_mean_bias(
    targets: np.ndarray,
    grid: BinGrid,
    spec: TargetSpec,
    strict: bool = True,
) -> float:
    """Mean absolute gap between each label and the mean of its weight
    vector, in target units."""
    ys = np.asarray(targets, dtype=float)
    q = weight_matrix(grid, ys, spec, strict=strict)
    return float(np.mean(np.abs(q @ grid.centers - ys)))
