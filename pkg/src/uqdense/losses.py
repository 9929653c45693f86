"""Training losses: mean square error and Gaussian negative log predictive density.

All losses reduce by the mean over every (sample, output) element and
return a :class:`LossValue` whose ``tensor`` can be back-propagated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError, ShapeError
from .nn.tensor import Tensor, as_tensor

SIGMA_FLOOR = 1e-6
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class LossValue:
    value: float
    per_sample: np.ndarray | None = None
    tensor: Tensor | None = None

    def backward(self) -> None:
        self.tensor.backward()

    def __float__(self) -> float:
        return self.value


def _finish(elem: Tensor) -> LossValue:
    total = elem.mean()
    d = elem.data
    per_sample = d.reshape(d.shape[0], -1).mean(axis=1) if d.ndim > 1 else d.copy()
    return LossValue(float(total.data), per_sample, total)


def _check_same(a: Tensor, b: Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def mse(y, y_hat) -> LossValue:
    y, y_hat = as_tensor(y), as_tensor(y_hat)
    _check_same(y, y_hat, "mse")
    return _finish((y - y_hat).square())


def nlpd(y, mu, sigma, floor: float = SIGMA_FLOOR) -> LossValue:
    """Gaussian NLPD with the standard deviation floored at ``floor``."""
    y, mu, sigma = as_tensor(y), as_tensor(mu), as_tensor(sigma)
    _check_same(y, mu, "nlpd")
    _check_same(y, sigma, "nlpd")
    s = sigma.floor_at(floor)
    if not np.all(s.data > 0):
        raise NumericError("non-positive standard deviation after flooring")
    r = y - mu
    elem = r.square() / (s.square() * 2.0) + s.log() + HALF_LOG_2PI
    return _finish(elem)


def nlpd_mc(y, preds, ddof: int = 0, floor: float = SIGMA_FLOOR) -> LossValue:
    """NLPD of the spread of ``k`` stochastic predictions per sample.

    ``preds`` has shape (n, k, n_out); the mean and standard deviation are
    taken over the middle axis (population form by default, ``ddof=1`` for
    the sample estimator).
    """
    y, preds = as_tensor(y), as_tensor(preds)
    if preds.ndim != 3:
        raise ShapeError(f"nlpd_mc expects preds of shape (n, k, n_out), got {preds.shape}")
    k = preds.shape[1]
    if k < 2:
        raise ConfigError(f"nlpd_mc needs k >= 2 replicates, got {k}")
    if y.shape != (preds.shape[0], preds.shape[2]):
        raise ShapeError(f"nlpd_mc: targets {y.shape} do not match preds {preds.shape}")
    mu = preds.mean(axis=1)
    sd = preds.std(axis=1, ddof=ddof)
    return nlpd(y, mu, sd, floor=floor)
