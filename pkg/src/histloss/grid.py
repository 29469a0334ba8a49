"""Uniform bin grids over a padded target range.

A grid is k equal-width bins tiling [a, b]. The support is the data range
[y_min, y_max] widened on each side by psi_sigma multiples of the smoothing
width sigma, where sigma itself is sigma_w bin widths. Solving for the bin
width gives

    w = (y_max - y_min) / (k - 2 * sigma_w * psi_sigma)

so that exactly sigma_w * psi_sigma bins per side are spent on padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["PaddingSpec", "BinGrid", "build_bin_grid", "bin_index", "bin_indices"]


@dataclass(frozen=True)
class PaddingSpec:
    """Padding parameters: sigma_w is the smoothing width in bin widths,
    psi_sigma the padding per side in multiples of sigma."""

    sigma_w: float
    psi_sigma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma_w) and self.sigma_w > 0):
            raise ValueError(f"sigma_w must be finite and > 0, got {self.sigma_w}")
        if not (math.isfinite(self.psi_sigma) and self.psi_sigma >= 0):
            raise ValueError(f"psi_sigma must be finite and >= 0, got {self.psi_sigma}")

    @classmethod
    def from_fixed_bins(cls, pad_bins: float, sigma_w: float) -> "PaddingSpec":
        """Express padding given as a fixed number of bins per side."""
        return cls(sigma_w=sigma_w, psi_sigma=pad_bins / sigma_w)


@dataclass(frozen=True)
class BinGrid:
    """k bins of width w tiling [a, b]; sigma is the default smoothing width
    implied by the padding spec (callers may override it per target)."""

    a: float
    b: float
    k: int
    w: float
    sigma: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "w", "sigma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")
        if self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if self.w <= 0:
            raise ValueError(f"bin width must be > 0, got {self.w}")
        span = self.b - self.a
        if abs(span - self.k * self.w) > 1e-9 * max(abs(span), self.k * self.w):
            raise ValueError(
                f"b - a = {span} does not equal k * w = {self.k * self.w}"
            )

    @property
    def edges(self) -> np.ndarray:
        """k + 1 bin edges, edges[i] = a + i * w."""
        return self.a + self.w * np.arange(self.k + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.a + self.w * (np.arange(self.k) + 0.5)


def build_bin_grid(y_min: float, y_max: float, k: int, pad: PaddingSpec) -> BinGrid:
    """Build a grid covering [y_min, y_max] plus sigma_w * psi_sigma padding
    bins per side, with the bin width widened accordingly."""
    if not (math.isfinite(y_min) and math.isfinite(y_max)):
        raise ValueError(f"y_min/y_max must be finite, got {y_min}, {y_max}")
    if y_max <= y_min:
        raise ValueError(f"need y_max > y_min, got y_min={y_min}, y_max={y_max}")
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    denom = k - 2.0 * pad.sigma_w * pad.psi_sigma
    if denom < 1.0:
        raise ValueError(
            f"k - 2*sigma_w*psi_sigma = {denom} < 1 "
            f"(k={k}, sigma_w={pad.sigma_w}, psi_sigma={pad.psi_sigma}); "
            "use more bins or less padding"
        )
    w = (y_max - y_min) / denom
    pad_width = pad.sigma_w * pad.psi_sigma * w
    return BinGrid(
        a=y_min - pad_width,
        b=y_max + pad_width,
        k=k,
        w=w,
        sigma=pad.sigma_w * w,
    )


def bin_index(grid: BinGrid, y: float) -> int:
    """Index i with y in [l_i, l_i + w); the last bin is closed so y = b
    maps to k - 1."""
    if not (grid.a <= y <= grid.b):
        raise ValueError(f"y={y} outside grid support [{grid.a}, {grid.b}]")
    i = int(np.floor((y - grid.a) / grid.w))
    return min(max(i, 0), grid.k - 1)


def bin_indices(grid: BinGrid, ys: np.ndarray) -> np.ndarray:
    """Vectorized bin_index with the same boundary convention."""
    ys = np.asarray(ys, dtype=float)
    bad = (ys < grid.a) | (ys > grid.b) | ~np.isfinite(ys)
    if np.any(bad):
        first = ys[bad].flat[0]
        raise ValueError(
            f"{int(bad.sum())} target(s) outside grid support "
            f"[{grid.a}, {grid.b}], e.g. y={first}"
        )
    idx = np.floor((ys - grid.a) / grid.w).astype(np.int64)
    return np.clip(idx, 0, grid.k - 1)
