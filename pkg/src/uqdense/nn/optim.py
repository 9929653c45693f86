"""Adam and plain SGD."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigError, ShapeError, TrainingError
from .tensor import Tensor

OPTIMIZERS = ("adam", "sgd")


@dataclass
class OptimizerState:
    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: list[np.ndarray] = field(default_factory=list)
    second_moment: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.kind!r}; choose from {OPTIMIZERS}")
        if not self.learning_rate > 0 or not self.epsilon > 0:
            raise ConfigError("learning_rate and epsilon must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("beta1 and beta2 must lie in (0, 1)")

    @classmethod
    def for_params(cls, params: Sequence[Tensor], kind: str = "adam", learning_rate: float = 1e-3, **kw):
        st = cls(kind=kind, learning_rate=learning_rate, **kw)
        st.first_moment = [np.zeros(p.shape) for p in params]
        st.second_moment = [np.zeros(p.shape) for p in params]
        return st

    def n_moments(self) -> int:
        return sum(m.size for m in self.first_moment)


def optimizer_step(state: OptimizerState, params: Sequence[Tensor], grads: Sequence[np.ndarray] | None = None) -> OptimizerState:
    """Apply one update in place and advance ``state.step``.

    ``grads`` defaults to each parameter's accumulated ``.grad``; a missing
    gradient counts as zero.
    """
    if grads is None:
        grads = [p.grad if p.grad is not None else np.zeros(p.shape) for p in params]
    if len(grads) != len(params):
        raise ShapeError(f"{len(grads)} gradients for {len(params)} parameters")
    offset = 0
    for i, (p, g) in enumerate(zip(params, grads)):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient {i} has shape {g.shape}, parameter has {p.shape}")
        bad = np.flatnonzero(~np.isfinite(g))
        if bad.size:
            raise TrainingError(f"non-finite gradient at parameter index {offset + int(bad[0])} (tensor {i})")
        offset += p.size

    state.step += 1
    if state.kind == "sgd":
        for p, g in zip(params, grads):
            p.data = p.data - state.learning_rate * np.asarray(g)
        return state

    if len(state.first_moment) != len(params):
        state.first_moment = [np.zeros(p.shape) for p in params]
        state.second_moment = [np.zeros(p.shape) for p in params]
    b1, b2, t = state.beta1, state.beta2, state.step
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for i, (p, g) in enumerate(zip(params, grads)):
        g = np.asarray(g, dtype=np.float64)
        m = state.first_moment[i]
        v = state.second_moment[i]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data = p.data - state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return state
