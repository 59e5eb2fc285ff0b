"""Deterministic quasi-random sampling (scrambled Sobol)."""

import math
import os
import warnings

import numpy as np
from scipy.stats import norm, qmc

DEFAULT_SEED = 42


def sobol(dim, count, seed=DEFAULT_SEED):
    """First `count` points of a scrambled Sobol sequence in ``(0, 1)^dim``."""
    if count <= 0:
        return np.zeros((0, dim))
    m = max(0, math.ceil(math.log2(count)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pts = qmc.Sobol(dim, scramble=True, seed=seed).random_base2(m)[:count]
    return np.clip(pts, 1e-12, 1 - 1e-12)


def sphere_directions(dim, count, seed=DEFAULT_SEED):
    """Unit vectors in R^dim from Sobol points pushed through the normal quantile."""
    g = norm.ppf(sobol(dim, count, seed))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def ball_points(dim, count, radius=1.0, seed=DEFAULT_SEED):
    """Points filling the closed ball of the given radius in R^dim."""
    u = sobol(dim + 1, count, seed)
    g = norm.ppf(u[:, :dim])
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    return radius * g * u[:, dim:] ** (1.0 / dim)


def threads():
    """Worker cap from ``SML_THREADS`` (default 1); -1 means all cores."""
    raw = os.environ.get("SML_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"SML_THREADS must be an integer, got {raw!r}") from None
    if n == 0 or n < -1:
        raise ValueError("SML_THREADS must be positive or -1")
    return n
