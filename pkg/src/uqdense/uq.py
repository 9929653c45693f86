"""Monte Carlo dropout and direct-probability prediction.

Both methods return a :class:`ProbPrediction`: a per-output Gaussian mean
and standard deviation in physical (unscaled) units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError, NumericError, ShapeError
from .losses import SIGMA_FLOOR
from .nn.model import DROPOUT, MlpModel, ReplicateMasks, predict_raw
from .nn.tensor import softplus

DEFAULT_CHUNK = 100
DEFAULT_BATCH_ROWS = 2**17


@dataclass
class ProbPrediction:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.mu.shape != self.sigma.shape:
            raise ShapeError(f"mu {self.mu.shape} and sigma {self.sigma.shape} differ in shape")
        if not np.all(self.sigma > 0):
            raise NumericError("predictive standard deviation must be strictly positive")

    def __len__(self) -> int:
        return self.mu.shape[0]

    def __getitem__(self, idx) -> "ProbPrediction":
        return ProbPrediction(self.mu[idx], self.sigma[idx])


def _as_inputs(model: MlpModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.n_inp:
        raise ShapeError(f"expected inputs of shape (n, {model.n_inp}), got {x.shape}")
    return x


def mc_dropout_replicates(model: MlpModel, x, replicates, seed: int) -> np.ndarray:
    """Raw dropout-active outputs (scaled units) for the listed replicate ids.

    Returns an array of shape (len(replicates), n, n_out).  Replicate ``j``
    always sees the same masks for a given (seed, input row).
    """
    xs = model.input_scaler.apply(_as_inputs(model, x))
    reps = list(replicates)
    n = xs.shape[0]
    out = predict_raw(model, xs, DROPOUT, masks=ReplicateMasks(seed, reps, 0, n), scaled_input=True,
                      repeat=len(reps), layout="replicate")
    return out.reshape(len(reps), n, model.width_last)


def mc_dropout_predict(model: MlpModel, x, k: int = 1000, seed: int = 0, *, chunk_size: int = DEFAULT_CHUNK,
                       batch_rows: int = DEFAULT_BATCH_ROWS, ddof: int = 0,
                       floor: float = SIGMA_FLOOR) -> ProbPrediction:
    """Mean and spread of ``k`` dropout-active passes per input.

    Replicates are evaluated ``chunk_size`` at a time, and inputs in blocks so
    that no forward call exceeds ``batch_rows`` stacked rows.  Statistics are
    accumulated replicate by replicate in index order, so neither knob changes
    the result.
    """
    if k < 2:
        raise ConfigError(f"MC dropout needs k >= 2, got {k}")
    if chunk_size < 1 or batch_rows < 1:
        raise ConfigError("chunk_size and batch_rows must be >= 1")
    if model.head != "plain":
        raise ConfigError("MC dropout prediction needs a plain-head model")
    x = _as_inputs(model, x)
    xs = model.input_scaler.apply(x)
    n = xs.shape[0]
    chunk = min(chunk_size, k)
    n_block = max(1, batch_rows // chunk)
    mean = np.zeros((n, model.n_out))
    m2 = np.zeros((n, model.n_out))

    for r0 in range(0, n, n_block):
        xb = xs[r0 : r0 + n_block]
        nb = xb.shape[0]
        mb = np.zeros((nb, model.n_out))
        s2 = np.zeros((nb, model.n_out))
        for c0 in range(0, k, chunk):
            reps = range(c0, min(k, c0 + chunk))
            out = predict_raw(model, xb, DROPOUT, masks=ReplicateMasks(seed, reps, r0, nb), scaled_input=True,
                              repeat=len(reps), layout="replicate")
            out = out.reshape(len(reps), nb, model.n_out)
            for j, o in zip(reps, out):
                delta = o - mb
                mb += delta / (j + 1)
                s2 += delta * (o - mb)
        mean[r0 : r0 + nb] = mb
        m2[r0 : r0 + nb] = s2

    sd = np.sqrt(m2 / (k - ddof))
    sd = np.maximum(sd, floor)
    return ProbPrediction(model.output_scaler.invert(mean), model.output_scaler.invert_scale(sd))


def direct_predict(model: MlpModel, x, floor: float = SIGMA_FLOOR) -> ProbPrediction:
    """One deterministic pass through a ``2 * n_out`` mean/std head."""
    if model.head != "direct" or model.width_last != 2 * model.n_out:
        raise ConfigError("direct prediction needs a model whose final layer has 2*n_out units")
    out = predict_raw(model, _as_inputs(model, x))
    n = model.n_out
    sd = np.maximum(softplus(out[:, n:]), floor)
    return ProbPrediction(model.output_scaler.invert(out[:, :n]), model.output_scaler.invert_scale(sd))


def predict(model: MlpModel, x, method: str, *, k: int = 1000, seed: int = 0, **kw) -> ProbPrediction:
    if method in ("direct", "direct_prob"):
        return direct_predict(model, x)
    if method in ("mc", "mc_dropout"):
        return mc_dropout_predict(model, x, k=k, seed=seed, **kw)
    raise ConfigError(f"unknown UQ method {method!r}")


def sample_gaussian(pred: ProbPrediction, n_draws: int, seed: int = 0) -> np.ndarray:
    """Independent normal draws, shape (n, n_draws, n_out)."""
    if n_draws < 1:
        raise ConfigError("n_draws must be >= 1")
    mu = np.atleast_2d(pred.mu)
    sd = np.atleast_2d(pred.sigma)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((mu.shape[0], n_draws, mu.shape[1]))
    z *= sd[:, None, :]
    z += mu[:, None, :]
    return z


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@lru_cache(maxsize=256)
def z_for_level(p: float) -> float:
    """Half-width multiplier of the central ``p`` interval of N(0, 1)."""
    if not 0.0 < p < 1.0:
        raise ConfigError(f"prediction interval level must lie in (0, 1), got {p}")
    # upper-tail form keeps precision for p near 1
    return float(-ndtri(0.5 * (1.0 - p)))


def prediction_interval(pred: ProbPrediction, p: float) -> tuple[np.ndarray, np.ndarray]:
    z = z_for_level(float(p))
    return pred.mu - z * pred.sigma, pred.mu + z * pred.sigma
