"""Heteroscedastic one-dimensional toy problems with known noise."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError

DEFAULT_RANGE = {1: (-10.0, 20.0), 2: (0.0, 10.0)}


def toy_mean(problem: int, x):
    x = np.asarray(x, dtype=np.float64)
    if problem == 1:
        return 0.3 * x + np.cos(0.5 * x) - 4.0
    if problem == 2:
        return np.sin(2.0 * x + np.cos(3.0 * x))
    raise ConfigError(f"unknown toy problem {problem!r}")


def toy_sigma(problem: int, x):
    x = np.asarray(x, dtype=np.float64)
    if problem == 1:
        return 0.5 * np.exp(np.sin(0.2 * x)) / (1.0 + np.exp(np.sin(0.8 * x)))
    if problem == 2:
        # tabulated form is signed; a standard deviation cannot be
        return np.abs(0.05 * np.sin(0.2 * x))
    raise ConfigError(f"unknown toy problem {problem!r}")


def toy_generate(problem: int, n: int, x_range=None, seed: int = 0):
    """Draw ``n`` uniform inputs and noisy targets.

    Returns
    -------
    x, y, sigma_true : ndarray, shape (n,)
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if problem not in DEFAULT_RANGE:
        raise ConfigError(f"unknown toy problem {problem!r}")
    lo, hi = DEFAULT_RANGE[problem] if x_range is None else x_range
    rng = np.random.default_rng(seed)
    x = rng.uniform(lo, hi, size=n)
    sd = toy_sigma(problem, x)
    y = toy_mean(problem, x) + sd * rng.standard_normal(n)
    return x, y, sd
