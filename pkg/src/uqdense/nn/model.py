"""Multilayer perceptron with per-layer dropout.

Dropout is inverted: kept activations are scaled by ``1 / (1 - rate)`` when
masks are drawn, so the deterministic pass needs no rescaling.  Masks come
from a *mask source* so that training (one sequential stream) and Monte Carlo
inference (one reproducible stream per replicate) share the same forward code.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..datasets.scaling import Scaler
from ..errors import ConfigError, InputError, ShapeError
from .tensor import Tensor, no_grad

ACTIVATIONS = ("linear", "relu", "tanh", "sigmoid", "softplus")
HEADS = ("plain", "direct")

DETERMINISTIC = "deterministic"
DROPOUT = "dropout_active"
DROPOUT_SEEDED = "dropout_active_with_mask_seed"
MODES = (DETERMINISTIC, DROPOUT, DROPOUT_SEEDED)


def _activate(t: Tensor, name: str) -> Tensor:
    if name == "linear":
        return t
    if name == "relu":
        return t.relu()
    if name == "tanh":
        return t.tanh()
    if name == "sigmoid":
        return t.sigmoid()
    if name == "softplus":
        return t.softplus()
    raise ConfigError(f"unsupported activation {name!r}; choose from {ACTIVATIONS}")


@dataclass
class DenseLayer:
    weights: Tensor  # (n_out_layer, n_in_layer)
    bias: Tensor  # (n_out_layer,)
    activation: str = "linear"
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unsupported activation {self.activation!r}; choose from {ACTIVATIONS}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(f"inconsistent layer shapes: weights {self.weights.shape}, bias {self.bias.shape}")

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]


@dataclass
class Architecture:
    """Layer widths, activations and dropout rates of an MLP.

    ``hidden`` lists hidden-layer widths; the output layer is appended by
    :func:`init_model` with width ``n_out`` (``2 * n_out`` for the direct
    probability head) and linear activation.
    """

    n_inp: int
    n_out: int
    hidden: list[int]
    activations: list[str] | str = "tanh"
    dropout: list[float] | float = 0.0
    head: str = "plain"

    def resolved(self) -> "Architecture":
        n = len(self.hidden)
        acts = [self.activations] * n if isinstance(self.activations, str) else list(self.activations)
        drops = [float(self.dropout)] * n if np.isscalar(self.dropout) else [float(d) for d in self.dropout]
        return Architecture(self.n_inp, self.n_out, list(self.hidden), acts, drops, self.head)

    def to_dict(self) -> dict:
        a = self.resolved()
        return {
            "n_inp": a.n_inp,
            "n_out": a.n_out,
            "hidden": a.hidden,
            "activations": a.activations,
            "dropout": a.dropout,
            "head": a.head,
        }


@dataclass
class MlpModel:
    layers: list[DenseLayer]
    n_inp: int
    n_out: int
    head: str = "plain"
    input_scaler: Scaler | None = None
    output_scaler: Scaler | None = None
    rng_seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.head not in HEADS:
            raise ConfigError(f"unknown head {self.head!r}")
        if not self.layers:
            raise ConfigError("model needs at least one layer")
        width = self.n_inp
        for i, layer in enumerate(self.layers):
            if layer.n_in != width:
                raise ShapeError(f"layer {i} expects {layer.n_in} inputs but receives {width}")
            width = layer.n_out
        expected = 2 * self.n_out if self.head == "direct" else self.n_out
        if width != expected:
            raise ConfigError(f"final layer width {width} does not match {self.head} head with n_out={self.n_out}")
        if self.input_scaler is None:
            self.input_scaler = Scaler.identity(self.n_inp)
        if self.output_scaler is None:
            self.output_scaler = Scaler.identity(self.n_out)

    @property
    def width_last(self) -> int:
        return self.layers[-1].n_out

    def parameters(self) -> list[Tensor]:
        out = []
        for layer in self.layers:
            out.extend((layer.weights, layer.bias))
        return out

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def has_dropout(self) -> bool:
        return any(layer.dropout_rate > 0 for layer in self.layers)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.data.ravel() for p in self.parameters()])

    def set_flat(self, flat: np.ndarray) -> None:
        pos = 0
        for p in self.parameters():
            p.data = flat[pos : pos + p.size].reshape(p.shape).copy()
            pos += p.size
        if pos != flat.size:
            raise ShapeError(f"flat parameter vector has {flat.size} entries, model needs {pos}")

    def clone(self) -> "MlpModel":
        return copy.deepcopy(self)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None


# ---------------------------------------------------------------------- masks
class RngMasks:
    """Draws each layer's keep-mask from one sequential generator."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def draw(self, layer_index: int, shape: tuple, rate: float) -> np.ndarray:
        return self.rng.random(shape) >= rate


class ReplicateMasks:
    """Per-replicate mask streams for inputs stacked replicate-major.

    Rows ``[j*n_rows, (j+1)*n_rows)`` belong to replicate ``replicates[j]`` and
    to input rows ``row_offset .. row_offset + n_rows``.  The stream for
    (replicate, layer) is a PCG64 generator keyed on ``(seed, replicate,
    layer)`` and advanced to the first input row, so the masks a given
    (replicate, input row, layer) sees never depend on how replicates or
    inputs were chunked.
    """

    def __init__(self, seed: int, replicates: Sequence[int], row_offset: int, n_rows: int):
        self.seed = int(seed)
        self.replicates = list(replicates)
        self.row_offset = int(row_offset)
        self.n_rows = int(n_rows)

    def stream(self, replicate: int, layer_index: int, width: int) -> np.random.Generator:
        bitgen = np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(replicate, layer_index)))
        bitgen.advance(self.row_offset * width)
        return np.random.Generator(bitgen)

    def draw(self, layer_index: int, shape: tuple, rate: float) -> np.ndarray:
        rows, width = shape
        if rows != self.n_rows * len(self.replicates):
            raise ShapeError(f"mask rows {rows} != {self.n_rows} x {len(self.replicates)} replicates")
        parts = [
            self.stream(rep, layer_index, width).random((self.n_rows, width)) >= rate
            for rep in self.replicates
        ]
        return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------- init
def init_model(arch: Architecture, seed: int, input_scaler: Scaler | None = None,
               output_scaler: Scaler | None = None) -> MlpModel:
    """Build an MLP with Glorot-uniform weights and zero biases."""
    a = arch.resolved()
    if a.n_inp < 1 or a.n_out < 1:
        raise ConfigError("n_inp and n_out must be positive")
    if len(a.hidden) == 0:
        raise ConfigError("at least one hidden layer is required")
    if any(w < 1 for w in a.hidden):
        raise ConfigError(f"hidden widths must be positive, got {a.hidden}")
    if len(a.activations) != len(a.hidden) or len(a.dropout) != len(a.hidden):
        raise ConfigError("activations/dropout must match the number of hidden layers")
    if a.head not in HEADS:
        raise ConfigError(f"unknown head {a.head!r}")

    rng = np.random.default_rng(seed)
    widths = [a.n_inp] + a.hidden + [2 * a.n_out if a.head == "direct" else a.n_out]
    acts = a.activations + ["linear"]
    drops = a.dropout + [0.0]
    layers = []
    for fan_in, fan_out, act, rate in zip(widths[:-1], widths[1:], acts, drops):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(DenseLayer(Tensor(w, requires_grad=True), Tensor(np.zeros(fan_out), requires_grad=True), act, rate))
    return MlpModel(layers, a.n_inp, a.n_out, a.head, input_scaler, output_scaler, int(seed),
                    meta={"architecture": a.to_dict()})


# ---------------------------------------------------------------------- forward
def forward(model: MlpModel, x, mode: str = DETERMINISTIC, *, rng: np.random.Generator | None = None,
            mask_seed: int | None = None, masks=None, scaled_input: bool = False, repeat: int = 1,
            layout: str = "sample") -> Tensor:
    """Run the network and return final-layer activations (scaled output units).

    Parameters
    ----------
    x : array_like or Tensor, shape (n, n_inp)
        Inputs in physical units unless ``scaled_input`` is set.
    mode : {"deterministic", "dropout_active", "dropout_active_with_mask_seed"}
        ``dropout_active`` draws masks from ``rng`` (or ``masks``);
        the seeded mode builds a fresh generator from ``mask_seed``.
    repeat, layout
        Return ``repeat`` stochastic replicates per input, stacked as in
        :meth:`Tensor.repeat_rows`.  Rows are replicated just before the first
        dropout mask, so the deterministic prefix runs once per input.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown forward mode {mode!r}")
    xd = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    if xd.ndim == 1:
        xd = xd[None, :]
    if xd.ndim != 2 or xd.shape[1] != model.n_inp:
        raise ShapeError(f"expected input of shape (n, {model.n_inp}), got {np.shape(xd)}")
    if not np.all(np.isfinite(xd)):
        raise InputError("non-finite values in model input")

    if mode == DROPOUT_SEEDED:
        if mask_seed is None:
            raise ConfigError("mask_seed required for dropout_active_with_mask_seed")
        masks = RngMasks(np.random.default_rng(mask_seed))
    elif mode == DROPOUT and masks is None:
        if rng is None:
            raise ConfigError("dropout_active mode needs an rng or a mask source")
        masks = RngMasks(rng)

    stochastic = [i for i, l in enumerate(model.layers) if l.dropout_rate > 0] if mode != DETERMINISTIC else []
    split_at = stochastic[0] if stochastic else len(model.layers) - 1

    if not scaled_input:
        xd = model.input_scaler.apply(xd)
    h = Tensor(xd)
    for i, layer in enumerate(model.layers):
        h = h @ layer.weights.T + layer.bias
        h = _activate(h, layer.activation)
        if i == split_at and repeat > 1:
            h = h.repeat_rows(repeat, layout)
        if mode != DETERMINISTIC and layer.dropout_rate > 0:
            keep = masks.draw(i, h.shape, layer.dropout_rate)
            h = h.dropout_mask(keep, 1.0 / (1.0 - layer.dropout_rate))
    return h


def predict_raw(model: MlpModel, x, mode: str = DETERMINISTIC, **kw) -> np.ndarray:
    """Forward pass without graph recording; returns a plain array."""
    with no_grad():
        return forward(model, x, mode, **kw).data
