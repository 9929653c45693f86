"""Hyperparameter search: random sampling, then Gaussian-process-guided trials.

Each trial draws an architecture from a :class:`SearchSpace` (every hidden
layer gets its own width, activation and dropout rate), trains it, and
records the best validation loss.  The guided phase fits a squared-exponential
Gaussian process to (encoded spec, loss) pairs and picks the candidate with the
largest expected improvement from a pool of random specs.

Tuning only ever sees a :class:`~uqdense.nn.train.TrainingData` holding the
train and validation splits; the test split is never passed in.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import linalg, optimize
from scipy.stats import norm

from .errors import ConfigError, SearchError, UqDenseError
from .nn.model import ACTIVATIONS, Architecture, init_model
from .nn.train import LOSS_KINDS, TrainingData, train

logger = logging.getLogger(__name__)

POOL_SIZE = 1000
JITTER = 1e-8
LENGTH_SCALES = (0.1, 0.2, 0.4, 0.8, 1.6)
DEFAULT_BUDGET = (25, 75)
DESK_BUDGET = (5, 10)


@dataclass
class SearchSpace:
    """Ranges are inclusive ``(low, high)`` pairs."""

    n_layers: tuple[int, int] = (2, 6)
    units: tuple[int, int] = (32, 512)
    activations: tuple[str, ...] = ("relu", "tanh", "softplus")
    dropout: tuple[float, float] = (0.05, 0.3)
    optimizers: tuple[str, ...] = ("adam",)
    learning_rate: tuple[float, float] = (1e-4, 1e-2)

    def __post_init__(self):
        self.n_layers = tuple(int(v) for v in self.n_layers)
        self.units = tuple(int(v) for v in self.units)
        self.dropout = tuple(float(v) for v in self.dropout)
        self.learning_rate = tuple(float(v) for v in self.learning_rate)
        self.activations = tuple(self.activations)
        self.optimizers = tuple(self.optimizers)
        for name in ("n_layers", "units", "dropout", "learning_rate"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"search range {name} is empty: ({lo}, {hi})")
        if self.n_layers[0] < 1 or self.units[0] < 1:
            raise ConfigError("n_layers and units must be at least 1")
        if self.dropout[0] < 0 or self.dropout[1] >= 1:
            raise ConfigError(f"dropout range must lie in [0, 1), got {self.dropout}")
        if self.learning_rate[0] <= 0:
            raise ConfigError("learning-rate range must be positive")
        if not self.activations or any(a not in ACTIVATIONS for a in self.activations):
            raise ConfigError(f"activations must be a non-empty subset of {ACTIVATIONS}")
        if not self.optimizers or any(o not in ("adam", "sgd") for o in self.optimizers):
            raise ConfigError("optimizers must be a non-empty subset of ('adam', 'sgd')")

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSpace":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown search-space keys {sorted(unknown)}")
        return cls(**d)

    def contains(self, spec: "TrialSpec") -> bool:
        n = len(spec.hidden)
        return (
            self.n_layers[0] <= n <= self.n_layers[1]
            and all(self.units[0] <= u <= self.units[1] for u in spec.hidden)
            and all(a in self.activations for a in spec.activations)
            and all(self.dropout[0] <= d <= self.dropout[1] for d in spec.dropout)
            and spec.optimizer in self.optimizers
            and self.learning_rate[0] <= spec.learning_rate <= self.learning_rate[1]
        )


@dataclass
class TrialSpec:
    hidden: list[int]
    activations: list[str]
    dropout: list[float]
    optimizer: str
    learning_rate: float

    def architecture(self, n_inp: int, n_out: int, head: str) -> Architecture:
        return Architecture(n_inp, n_out, list(self.hidden), list(self.activations), list(self.dropout), head)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrialResult:
    index: int
    spec: TrialSpec
    validation_loss: float
    seed: int
    phase: str = "random"
    failed: bool = False
    error: str | None = None
    history: dict | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "phase": self.phase,
            "spec": self.spec.to_dict(),
            "validation_loss": None if self.failed else self.validation_loss,
            "seed": self.seed,
            "failed": self.failed,
            "error": self.error,
            "history": self.history,
        }


def sample_spec(space: SearchSpace, rng: np.random.Generator) -> TrialSpec:
    n = int(rng.integers(space.n_layers[0], space.n_layers[1] + 1))
    hidden = [int(v) for v in rng.integers(space.units[0], space.units[1] + 1, size=n)]
    acts = [space.activations[i] for i in rng.integers(0, len(space.activations), size=n)]
    drops = [float(v) for v in rng.uniform(space.dropout[0], space.dropout[1], size=n)]
    opt = space.optimizers[int(rng.integers(0, len(space.optimizers)))]
    lo, hi = np.log(space.learning_rate)
    lr = float(np.exp(rng.uniform(lo, hi)))
    return TrialSpec(hidden, acts, drops, opt, min(max(lr, space.learning_rate[0]), space.learning_rate[1]))


def _unit(v, lo, hi) -> float:
    return 0.0 if hi == lo else (v - lo) / (hi - lo)


def encode_spec(spec: TrialSpec, space: SearchSpace) -> np.ndarray:
    """Normalized feature vector: depth, mean width, mean dropout, log learning
    rate, activation fractions and a one-hot optimizer."""
    lr_lo, lr_hi = np.log(space.learning_rate)
    num = [
        _unit(len(spec.hidden), *space.n_layers),
        _unit(float(np.mean(spec.hidden)), *space.units),
        _unit(float(np.mean(spec.dropout)), *space.dropout),
        _unit(float(np.log(spec.learning_rate)), lr_lo, lr_hi),
    ]
    acts = [spec.activations.count(a) / len(spec.activations) for a in space.activations]
    opts = [1.0 if spec.optimizer == o else 0.0 for o in space.optimizers]
    return np.array(num + acts + opts)


# ---------------------------------------------------------------- trainers
Trainer = Callable[[TrialSpec, TrainingData, str, int], "tuple[float, dict | None]"]


def make_trainer(head: str = "plain", epochs: int = 50, batch_size: int = 256, patience: int = 10,
                 k: int = 32) -> Trainer:
    """Default trainer: build, fit and return the best validation loss."""

    def run(spec: TrialSpec, data: TrainingData, loss_kind: str, seed: int):
        arch = spec.architecture(data.x_train.shape[1], data.y_train.shape[1], head)
        model = init_model(arch, seed)
        hist = train(model, data, loss_kind, batch_size=batch_size, epochs=epochs, patience=patience,
                     optimizer=spec.optimizer, learning_rate=spec.learning_rate, k=k, seed=seed)
        return hist.best_val_loss, hist.to_dict()

    return run


def _trial_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(1, index)).generate_state(1)[0])


def _spec_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, index)))


def _pool_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2, index)))


def _run_trial(index, spec, phase, data, loss_kind, seed, trainer) -> TrialResult:
    tseed = _trial_seed(seed, index)
    try:
        loss, hist = trainer(spec, data, loss_kind, tseed)
        loss = float(loss)
        if not math.isfinite(loss):
            raise SearchError(f"non-finite validation loss {loss}")
    except (UqDenseError, FloatingPointError) as exc:
        logger.warning("trial %d failed: %s", index, exc)
        return TrialResult(index, spec, float("nan"), tseed, phase, True, f"{type(exc).__name__}: {exc}")
    return TrialResult(index, spec, loss, tseed, phase, history=hist)


def rank_trials(trials: list[TrialResult]) -> list[TrialResult]:
    """Successful trials by ascending loss (ties by index), then failed ones by index."""
    ok = sorted((t for t in trials if not t.failed), key=lambda t: (t.validation_loss, t.index))
    bad = sorted((t for t in trials if t.failed), key=lambda t: t.index)
    return ok + bad


# ---------------------------------------------------------------- surrogate
def _se_kernel(a: np.ndarray, b: np.ndarray, ell) -> np.ndarray:
    a = a / ell
    b = b / ell
    d2 = np.sum(a * a, 1)[:, None] + np.sum(b * b, 1)[None, :] - 2.0 * a @ b.T
    return np.exp(-0.5 * np.maximum(d2, 0.0))


def _neg_log_marginal(log_ell, x, y, noise):
    kxx = _se_kernel(x, x, np.exp(log_ell)) + (noise + JITTER) * np.eye(len(y))
    try:
        cf = linalg.cho_factor(kxx, lower=True)
    except linalg.LinAlgError:
        return np.inf
    return 0.5 * y @ linalg.cho_solve(cf, y) + np.sum(np.log(np.diag(cf[0])))


def fit_length_scales(x: np.ndarray, y: np.ndarray, noise: float = 1e-4) -> np.ndarray:
    """Per-dimension length scales maximizing the marginal likelihood.

    The search starts from the best shared length scale in
    :data:`LENGTH_SCALES` and is bounded to ``[0.05, 20]``.
    """
    d = x.shape[1]
    starts = [np.full(d, np.log(ell)) for ell in LENGTH_SCALES]
    vals = [_neg_log_marginal(s0, x, y, noise) for s0 in starts]
    if not np.isfinite(min(vals)):
        raise np.linalg.LinAlgError("kernel matrix is singular for every length scale")
    x0 = starts[int(np.argmin(vals))]
    res = optimize.minimize(_neg_log_marginal, x0, args=(x, y, noise), method="L-BFGS-B",
                            bounds=[(np.log(0.05), np.log(20.0))] * d)
    best = res.x if np.isfinite(res.fun) and res.fun <= min(vals) else x0
    return np.exp(best)


def gp_posterior(x_obs: np.ndarray, y_obs: np.ndarray, x_new: np.ndarray, noise: float = 1e-4):
    """Posterior mean and std of a squared-exponential GP on standardized targets.

    Raises ``numpy.linalg.LinAlgError`` when the kernel matrix cannot be
    factorized.
    """
    mean, scale = float(np.mean(y_obs)), float(np.std(y_obs))
    scale = scale if scale > 0 else 1.0
    y = (y_obs - mean) / scale
    ell = fit_length_scales(x_obs, y, noise)
    kxx = _se_kernel(x_obs, x_obs, ell) + (noise + JITTER) * np.eye(len(y))
    cf = linalg.cho_factor(kxx, lower=True)
    alpha = linalg.cho_solve(cf, y)
    ks = _se_kernel(x_new, x_obs, ell)
    mu = ks @ alpha
    v = linalg.cho_solve(cf, ks.T)
    var = np.maximum(1.0 - np.sum(ks * v.T, axis=1), 1e-12)
    return mean + scale * mu, scale * np.sqrt(var)


def expected_improvement(mu: np.ndarray, sd: np.ndarray, best: float, xi: float = 0.0) -> np.ndarray:
    """EI for minimization."""
    imp = best - mu - xi
    z = imp / sd
    return imp * norm.cdf(z) + sd * norm.pdf(z)


def _guided_spec(space, done, seed, index) -> tuple[TrialSpec, bool]:
    """Next spec from the surrogate, or a random one if it cannot be fitted."""
    rng = _pool_rng(seed, index)
    pool = [sample_spec(space, rng) for _ in range(POOL_SIZE)]
    ok = [t for t in done if not t.failed]
    if len(ok) >= 2:
        x_obs = np.array([encode_spec(t.spec, space) for t in ok])
        y_obs = np.array([t.validation_loss for t in ok])
        x_new = np.array([encode_spec(s, space) for s in pool])
        try:
            mu, sd = gp_posterior(x_obs, y_obs, x_new)
            ei = expected_improvement(mu, sd, float(y_obs.min()))
            if np.all(np.isfinite(ei)):
                return pool[int(np.argmax(ei))], True
        except np.linalg.LinAlgError:
            pass
    logger.info("surrogate unavailable at trial %d; sampling at random", index)
    return pool[0], False


# ---------------------------------------------------------------- searches
def _log_trial(path, trial: TrialResult) -> None:
    if path is not None:
        with open(path, "a") as fh:
            fh.write(json.dumps(trial.to_dict(), sort_keys=True) + "\n")


def _check(data, loss_kind):
    if loss_kind not in LOSS_KINDS:
        raise ConfigError(f"unknown loss kind {loss_kind!r}")
    if not isinstance(data, TrainingData):
        raise ConfigError("tuning data must be a TrainingData holding only train and validation splits")


def gp_guided_search(space: SearchSpace, data: TrainingData, loss_kind: str, n_random: int = DEFAULT_BUDGET[0],
                     n_guided: int = DEFAULT_BUDGET[1], seed: int = 0, *, trainer: Trainer | None = None,
                     log_path=None) -> list[TrialResult]:
    """``n_random`` random trials followed by ``n_guided`` expected-improvement trials.

    Returns all trials ranked by validation loss.  Trial ``i`` of the random
    phase draws its spec from a stream keyed on ``(seed, i)``, so
    ``n_guided=0`` reproduces :func:`random_search` exactly.
    """
    _check(data, loss_kind)
    if n_random < 1 or n_guided < 0:
        raise ConfigError("need n_random >= 1 and n_guided >= 0")
    if n_guided > 0 and n_random < 2:
        raise ConfigError("the guided phase needs at least 2 random trials")
    trainer = trainer or make_trainer()
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        Path(log_path).write_text("")
    done: list[TrialResult] = []
    for i in range(n_random + n_guided):
        if i < n_random:
            spec, phase = sample_spec(space, _spec_rng(seed, i)), "random"
        else:
            spec, used = _guided_spec(space, done, seed, i)
            phase = "guided" if used else "guided_fallback"
        trial = _run_trial(i, spec, phase, data, loss_kind, seed, trainer)
        done.append(trial)
        _log_trial(log_path, trial)
    if all(t.failed for t in done):
        raise SearchError(f"all {len(done)} trials failed; first error: {done[0].error}")
    return rank_trials(done)


def random_search(space: SearchSpace, data: TrainingData, loss_kind: str, n_trials: int, seed: int = 0, *,
                  trainer: Trainer | None = None, log_path=None) -> list[TrialResult]:
    if n_trials < 1:
        raise ConfigError("n_trials must be >= 1")
    return gp_guided_search(space, data, loss_kind, n_trials, 0, seed, trainer=trainer, log_path=log_path)


def tuning_data(x, y, split) -> TrainingData:
    """Train/validation arrays for tuning; the split's test rows are dropped here."""
    x = np.asarray(x)
    y = np.asarray(y)
    return TrainingData(x[split.train], y[split.train], x[split.validation], y[split.validation])
