"""Per-feature z-score scaling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigError


@dataclass
class Scaler:
    mean: np.ndarray
    std: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        if self.mean.shape != self.std.shape:
            raise ConfigError("scaler mean/std length mismatch")
        if np.any(~(self.std > 0)):
            raise ConfigError("scaler std entries must be strictly positive")

    @classmethod
    def identity(cls, n: int) -> "Scaler":
        return cls(np.zeros(n), np.ones(n))

    def __len__(self) -> int:
        return self.mean.size

    def apply(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def invert(self, z):
        return np.asarray(z, dtype=np.float64) * self.std + self.mean

    def invert_scale(self, s):
        """Map a spread (e.g. a standard deviation) back to physical units."""
        return np.asarray(s, dtype=np.float64) * self.std

    def to_dict(self) -> dict:
        d = {"mean": self.mean.tolist(), "std": self.std.tolist()}
        if self.names is not None:
            d["names"] = list(self.names)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        names = d.get("names")
        return cls(np.array(d["mean"]), np.array(d["std"]), tuple(names) if names else None)


def fit_scaler(features, names: Sequence[str] | None = None) -> Scaler:
    """Fit per-column mean and population standard deviation.

    Raises
    ------
    ConfigError
        If any column is constant; the message names the offending feature.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise ConfigError("cannot fit a scaler on zero rows")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    bad = np.flatnonzero(~(std > 0))
    if bad.size:
        label = names[bad[0]] if names is not None else f"column {bad[0]}"
        raise ConfigError(f"feature {label!r} is constant; cannot scale it")
    return Scaler(mean, std, tuple(names) if names is not None else None)


def apply_scaler(scaler: Scaler, x):
    return scaler.apply(x)


def invert_scaler(scaler: Scaler, z):
    return scaler.invert(z)
