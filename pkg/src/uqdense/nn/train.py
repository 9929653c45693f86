"""Mini-batch training with early stopping on validation loss."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import losses
from ..datasets.scaling import fit_scaler
from ..errors import ConfigError, TrainingError
from .model import DROPOUT, MlpModel, RngMasks, forward
from .optim import OptimizerState, optimizer_step
from .tensor import no_grad

logger = logging.getLogger(__name__)

LOSS_KINDS = ("mse", "nlpd_direct", "nlpd_mc")


@dataclass
class TrainingData:
    """Train/validation arrays in physical units."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray

    def __post_init__(self):
        for name in ("x_train", "y_train", "x_val", "y_val"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            if a.ndim == 1:
                a = a[:, None]
            setattr(self, name, a)
        if len(self.x_train) != len(self.y_train) or len(self.x_val) != len(self.y_val):
            raise ConfigError("feature/target row counts differ")


@dataclass
class TrainingHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int | None = None
    best_val_loss: float = float("inf")
    stopped_early: bool = False

    def to_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
            "stopped_early": self.stopped_early,
        }


def batch_loss(model: MlpModel, xs: np.ndarray, ys: np.ndarray, loss_kind: str, *,
               rng: np.random.Generator | None = None, k: int = 32, ddof: int = 0,
               floor: float | None = None) -> losses.LossValue:
    """Loss of one batch given already-scaled inputs and targets."""
    floor = losses.SIGMA_FLOOR if floor is None else floor
    if loss_kind == "mse":
        out = forward(model, xs, scaled_input=True)
        return losses.mse(ys, out)
    if loss_kind == "nlpd_direct":
        out = forward(model, xs, scaled_input=True)
        n = model.n_out
        return losses.nlpd(ys, out[:, :n], out[:, n:].softplus(), floor=floor)
    if loss_kind == "nlpd_mc":
        b = xs.shape[0]
        # sample-major stacking: rows i*k .. i*k+k-1 replicate input i
        out = forward(model, xs, DROPOUT, masks=RngMasks(rng), scaled_input=True, repeat=k, layout="sample")
        return losses.nlpd_mc(ys, out.reshape(b, k, model.n_out), ddof=ddof, floor=floor)
    raise ConfigError(f"unknown loss kind {loss_kind!r}; choose from {LOSS_KINDS}")


def check_compatible(model: MlpModel, loss_kind: str, k: int = 32) -> None:
    if loss_kind not in LOSS_KINDS:
        raise ConfigError(f"unknown loss kind {loss_kind!r}; choose from {LOSS_KINDS}")
    if loss_kind == "nlpd_direct" and model.head != "direct":
        raise ConfigError("nlpd_direct training needs a model built with head='direct'")
    if loss_kind in ("mse", "nlpd_mc") and model.head != "plain":
        raise ConfigError(f"{loss_kind} training needs a plain-head model")
    if loss_kind == "nlpd_mc":
        if k < 2:
            raise ConfigError(f"nlpd_mc needs k >= 2, got {k}")
        if not model.has_dropout():
            raise ConfigError("MC dropout needs a nonzero dropout rate in at least one layer")


def evaluate_loss(model: MlpModel, xs: np.ndarray, ys: np.ndarray, loss_kind: str, *, seed: int = 0,
                  k: int = 32, ddof: int = 0, chunk: int = 4096, floor: float | None = None) -> float:
    """Mean loss over scaled arrays, evaluated in chunks without recording a graph."""
    if len(xs) == 0:
        return float("nan")
    rng = np.random.default_rng(seed)
    total = 0.0
    with no_grad():
        for start in range(0, len(xs), chunk):
            sl = slice(start, start + chunk)
            lv = batch_loss(model, xs[sl], ys[sl], loss_kind, rng=rng, k=k, ddof=ddof, floor=floor)
            total += lv.value * len(xs[sl])
    return total / len(xs)


def train(model: MlpModel, data: TrainingData, loss_kind: str = "nlpd_direct", *, batch_size: int = 256,
          epochs: int = 100, patience: int | None = 20, optimizer: str = "adam", learning_rate: float = 1e-3,
          k: int = 32, ddof: int = 0, seed: int | None = None, fit_scalers: bool = True,
          floor: float | None = None, verbose: bool = False) -> TrainingHistory:
    """Fit ``model`` in place and return the per-epoch loss history.

    The weights with the lowest validation loss are restored at the end.
    Scalers are fitted on the training split when ``fit_scalers`` is set.
    """
    if batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    check_compatible(model, loss_kind, k)
    history = TrainingHistory()
    if epochs <= 0:
        return history

    if fit_scalers:
        model.input_scaler = fit_scaler(data.x_train)
        model.output_scaler = fit_scaler(data.y_train)
    xt = model.input_scaler.apply(data.x_train)
    yt = model.output_scaler.apply(data.y_train)
    xv = model.input_scaler.apply(data.x_val)
    yv = model.output_scaler.apply(data.y_val)

    seed = model.rng_seed if seed is None else seed
    ss = np.random.SeedSequence(seed)
    shuffle_rng, mask_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    val_seed = int(np.random.SeedSequence(seed, spawn_key=(7,)).generate_state(1)[0])

    params = model.parameters()
    state = OptimizerState.for_params(params, kind=optimizer, learning_rate=learning_rate)
    best = model.get_flat()
    since_best = 0
    n = len(xt)

    for epoch in range(epochs):
        order = shuffle_rng.permutation(n)
        running = 0.0
        for b, start in enumerate(range(0, n, batch_size)):
            idx = order[start : start + batch_size]
            model.zero_grad()
            lv = batch_loss(model, xt[idx], yt[idx], loss_kind, rng=mask_rng, k=k, ddof=ddof, floor=floor)
            if not np.isfinite(lv.value):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}")
            lv.backward()
            optimizer_step(state, params)
            running += lv.value * len(idx)
        train_loss = running / n
        val_loss = evaluate_loss(model, xv, yv, loss_kind, seed=val_seed, k=k, ddof=ddof, floor=floor)
        if len(xv) == 0:
            val_loss = train_loss
        if not np.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        if verbose:
            logger.info("epoch %d train %.5f val %.5f", epoch, train_loss, val_loss)
        if val_loss < history.best_val_loss:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best = model.get_flat()
            since_best = 0
        else:
            since_best += 1
            if patience is not None and since_best >= patience:
                history.stopped_early = True
                break

    model.set_flat(best)
    model.zero_grad()
    return history
