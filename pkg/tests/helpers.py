"""Shared test utilities: finite-difference oracles and model builders."""

from __future__ import annotations

import numpy as np

from histloss import HeadSpec, MlpModel


def numeric_grad(f, x: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central finite differences with per-coordinate step
    rel_step * max(1, |x_i|)."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        h = rel_step * max(1.0, abs(flat[i]))
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2.0 * h)
    return g


def rel_err(approx: np.ndarray, exact: np.ndarray) -> float:
    approx = np.asarray(approx, dtype=float).reshape(-1)
    exact = np.asarray(exact, dtype=float).reshape(-1)
    denom = max(np.linalg.norm(exact), np.linalg.norm(approx), 1e-12)
    return float(np.linalg.norm(approx - exact) / denom)


def model_numeric_grad(model: MlpModel, scalar_loss, rel_step: float = 1e-6) -> list[np.ndarray]:
    """Finite-difference gradient of scalar_loss() over every model
    parameter, perturbing entries in place."""
    grads = []
    for p in model.parameters():
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            h = rel_step * max(1.0, abs(flat[i]))
            orig = flat[i]
            flat[i] = orig + h
            model.bump_version()
            fp = scalar_loss()
            flat[i] = orig - h
            model.bump_version()
            fm = scalar_loss()
            flat[i] = orig
            model.bump_version()
            gf[i] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads


def small_model(rng, input_dim=3, hidden=(8, 6), head="softmax", k=5, **kwargs) -> MlpModel:
    heads = [HeadSpec.softmax(k)] if head == "softmax" else [HeadSpec.scalar()]
    return MlpModel(input_dim, list(hidden), heads, rng=rng, **kwargs)


def random_simplex(rng, k: int) -> np.ndarray:
    return rng.dirichlet(np.ones(k))
