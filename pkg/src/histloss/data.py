"""Dataset ingestion, standardization, splitting, and synthetic tasks."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = ["Dataset", "load_csv", "split", "standardize", "make_synthetic"]

SYNTHETIC_KINDS = ("linear", "sine", "bimodal-noise")


@dataclass
class Dataset:
    """Features, targets, and (after standardize/split) the statistics and
    index sets derived from the training split."""

    features: np.ndarray
    targets: np.ndarray
    feature_means: np.ndarray | None = None
    feature_stds: np.ndarray | None = None
    target_min: float | None = None
    target_max: float | None = None
    train_idx: np.ndarray | None = None
    test_idx: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if self.targets.shape != (self.features.shape[0],):
            raise ValueError(
                f"targets shape {self.targets.shape} does not match "
                f"{self.features.shape[0]} feature rows"
            )
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.targets))):
            raise ValueError("features and targets must be finite (no missing values)")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def train_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self.train_idx is None:
            raise ValueError("dataset has no split; call split() first")
        return self.features[self.train_idx], self.targets[self.train_idx]

    def test_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self.test_idx is None:
            raise ValueError("dataset has no split; call split() first")
        return self.features[self.test_idx], self.targets[self.test_idx]


def load_csv(path, has_header: bool = False, target_column="last") -> Dataset:
    """Parse a rectangular numeric CSV into features and a target column."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if has_header and rows:
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    if width < 2:
        raise ValueError(f"{path}: need at least 2 columns, got {width}")
    values = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: ragged row {r} has {len(row)} cells, expected {width}")
        for c, cell in enumerate(row):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric cell at row {r}, column {c}: {cell!r}"
                ) from None
    tcol = width - 1 if target_column == "last" else int(target_column)
    if not (0 <= tcol < width):
        raise ValueError(f"target column {tcol} out of range for {width} columns")
    features = np.delete(values, tcol, axis=1)
    return Dataset(features=features, targets=values[:, tcol], meta={"path": str(path)})


def split(dataset: Dataset, test_fraction: float, seed: int) -> Dataset:
    """Seeded uniform train/test split."""
    if not (0.0 <= test_fraction < 1.0):
        raise ValueError(f"test_fraction must be in [0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.n)
    n_test = int(round(test_fraction * dataset.n))
    return replace(dataset, test_idx=np.sort(perm[:n_test]), train_idx=np.sort(perm[n_test:]))


def standardize(dataset: Dataset, fit_on: np.ndarray | None = None) -> Dataset:
    """Scale every row to zero mean and unit variance per feature, with the
    statistics fitted on the training split only. Zero-variance features are
    dropped. Target min/max are recorded from the fit rows for grid
    construction."""
    if fit_on is None:
        fit_on = dataset.train_idx
    if fit_on is None or len(fit_on) == 0:
        raise ValueError("standardize needs a non-empty training split")
    fit_rows = dataset.features[fit_on]
    means = fit_rows.mean(axis=0)
    stds = fit_rows.std(axis=0)
    keep = stds > 1e-12 * np.maximum(1.0, np.abs(means))
    if not np.any(keep):
        raise ValueError("all features have zero variance on the training split")
    if not np.all(keep):
        dropped = np.flatnonzero(~keep)
        warnings.warn(f"dropped {dropped.size} zero-variance feature(s): {dropped.tolist()}")
    features = (dataset.features[:, keep] - means[keep]) / stds[keep]
    fit_targets = dataset.targets[fit_on]
    return replace(
        dataset,
        features=features,
        feature_means=means[keep],
        feature_stds=stds[keep],
        target_min=float(fit_targets.min()),
        target_max=float(fit_targets.max()),
        meta={**dataset.meta, "dropped_features": np.flatnonzero(~keep).tolist()},
    )


def make_synthetic(kind: str, n: int, d: int = 1, noise_std: float = 0.0, seed: int = 0) -> Dataset:
    """Reproducible synthetic regression tasks.

    linear: y = X beta (+ Gaussian noise), beta recorded in meta.
    sine: y = sin(pi/2 * <x, u>) + Gaussian noise for the unit diagonal u,
    so targets sweep the full [-1, 1] amplitude monotonically per feature.
    bimodal-noise: y = X beta +/- noise_std with equal probability.
    """
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}, expected one of {SYNTHETIC_KINDS}")
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    meta: dict = {"kind": kind, "noise_std": noise_std, "seed": seed}
    if kind == "linear":
        x = rng.standard_normal((n, d))
        beta = rng.standard_normal(d)
        y = x @ beta
        if noise_std > 0:
            y = y + noise_std * rng.standard_normal(n)
        meta["beta"] = beta
    elif kind == "sine":
        x = rng.uniform(-1.0, 1.0, size=(n, d))
        y = np.sin(0.5 * np.pi * x @ (np.ones(d) / np.sqrt(d)))
        if noise_std > 0:
            y = y + noise_std * rng.standard_normal(n)
    else:  # bimodal-noise
        x = rng.standard_normal((n, d))
        beta = rng.standard_normal(d)
        signs = 2.0 * rng.integers(0, 2, size=n) - 1.0
        y = x @ beta + noise_std * signs
        meta["beta"] = beta
    return Dataset(features=x, targets=y, meta=meta)
