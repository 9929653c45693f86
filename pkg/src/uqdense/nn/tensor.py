"""Reverse-mode automatic differentiation over float64 numpy arrays.

Every differentiable operation returns a new :class:`Tensor` that remembers
its parents and a closure propagating the upstream gradient to them.  Calling
:meth:`Tensor.backward` on a scalar walks the recorded graph in reverse
topological order.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from ..errors import ShapeError, StateError

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference only)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    # sum out axes that numpy broadcasting added or stretched
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """Dense float64 array with an optional gradient.

    Parameters
    ----------
    data : array_like
        Values; copied to a C-contiguous float64 array.
    requires_grad : bool
        Whether gradients should be accumulated into :attr:`grad`.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64, order="C")
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self._op = "leaf"

    # ------------------------------------------------------------------ basics
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    @staticmethod
    def _make(data: np.ndarray, parents: Sequence["Tensor"], op: str, backward) -> "Tensor":
        out = Tensor(data)
        if _GRAD_ENABLED and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
            out._op = op
        return out

    # ------------------------------------------------------------------ autodiff
    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``.

        Raises
        ------
        StateError
            If no computation was recorded into this tensor (for example
            ``backward`` on a raw parameter, or under :func:`no_grad`).
        """
        if self._backward is None:
            raise StateError("backward() called on a tensor with no recorded computation")
        if grad is None:
            if self.data.size != 1:
                raise ShapeError(f"backward() without a seed gradient needs a scalar, got shape {self.shape}")
            grad = np.ones_like(self.data)

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    node._accumulate(g)
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if id(parent) in grads:
                    grads[id(parent)] = grads[id(parent)] + pg
                else:
                    grads[id(parent)] = pg

    # ------------------------------------------------------------------ arithmetic
    def __add__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

        return Tensor._make(a.data + b.data, (a, b), "add", bw)

    __radd__ = __add__

    def __sub__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

        return Tensor._make(a.data - b.data, (a, b), "sub", bw)

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other) - self

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

        return Tensor._make(a.data * b.data, (a, b), "mul", bw)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            return (
                _unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
            )

        return Tensor._make(a.data / b.data, (a, b), "div", bw)

    def __rtruediv__(self, other) -> "Tensor":
        return as_tensor(other) / self

    def __neg__(self) -> "Tensor":
        return Tensor._make(-self.data, (self,), "neg", lambda g: (-g,))

    def __matmul__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

        def bw(g):
            return g @ b.data.T, a.data.T @ g

        return Tensor._make(a.data @ b.data, (a, b), "matmul", bw)

    @property
    def T(self) -> "Tensor":
        return Tensor._make(self.data.T, (self,), "transpose", lambda g: (g.T,))

    def square(self) -> "Tensor":
        x = self.data
        return Tensor._make(x * x, (self,), "square", lambda g: (2.0 * x * g,))

    def exp(self) -> "Tensor":
        y = np.exp(self.data)
        return Tensor._make(y, (self,), "exp", lambda g: (g * y,))

    def log(self) -> "Tensor":
        x = self.data
        return Tensor._make(np.log(x), (self,), "log", lambda g: (g / x,))

    def sqrt(self) -> "Tensor":
        y = np.sqrt(self.data)
        return Tensor._make(y, (self,), "sqrt", lambda g: (g / (2.0 * y),))

    # ------------------------------------------------------------------ activations
    def relu(self) -> "Tensor":
        mask = self.data > 0
        return Tensor._make(self.data * mask, (self,), "relu", lambda g: (g * mask,))

    def tanh(self) -> "Tensor":
        y = np.tanh(self.data)
        return Tensor._make(y, (self,), "tanh", lambda g: (g * (1.0 - y * y),))

    def sigmoid(self) -> "Tensor":
        y = expit(self.data)
        return Tensor._make(y, (self,), "sigmoid", lambda g: (g * y * (1.0 - y),))

    def softplus(self) -> "Tensor":
        x = self.data
        return Tensor._make(softplus(x), (self,), "softplus", lambda g: (g * expit(x),))

    def floor_at(self, floor: float) -> "Tensor":
        """Elementwise ``max(x, floor)``; gradient passes only where ``x > floor``."""
        x = self.data
        keep = x > floor
        return Tensor._make(np.where(keep, x, floor), (self,), "floor", lambda g: (g * keep,))

    def dropout_mask(self, mask: np.ndarray, scale: float) -> "Tensor":
        m = np.asarray(mask, dtype=np.float64) * scale
        return Tensor._make(self.data * m, (self,), "dropout", lambda g: (g * m,))

    # ------------------------------------------------------------------ reductions
    def sum(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        shape = self.shape

        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return Tensor._make(np.sum(self.data, axis=axis, keepdims=keepdims), (self,), "sum", bw)

    def mean(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        n = self.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def std(self, axis: int, ddof: int = 0, keepdims: bool = False) -> "Tensor":
        """Standard deviation along ``axis`` as a single fused node.

        Where the spread is exactly zero the gradient is defined as zero
        rather than the 0/0 of the naive composition.
        """
        x = self.data
        k = x.shape[axis]
        if k - ddof <= 0:
            raise ShapeError(f"std over axis of length {k} with ddof={ddof}")
        mu = x.mean(axis=axis, keepdims=True)
        dev = x - mu
        sd = np.sqrt((dev * dev).sum(axis=axis, keepdims=True) / (k - ddof))

        def bw(g):
            if not keepdims:
                g = np.expand_dims(g, axis)
            with np.errstate(divide="ignore", invalid="ignore"):
                coef = np.where(sd > 0, g / ((k - ddof) * sd), 0.0)
            return (coef * dev,)

        out = sd if keepdims else np.squeeze(sd, axis=axis)
        return Tensor._make(out, (self,), "std", bw)

    # ------------------------------------------------------------------ shape ops
    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.shape
        return Tensor._make(self.data.reshape(shape), (self,), "reshape", lambda g: (g.reshape(old),))

    def repeat_rows(self, k: int, layout: str = "sample") -> "Tensor":
        """Replicate rows ``k`` times.

        ``layout="sample"`` gives rows ``i*k .. i*k+k-1`` = row ``i``;
        ``layout="replicate"`` stacks ``k`` full copies of the matrix.
        """
        n = self.shape[0]
        rest = self.shape[1:]
        if layout == "sample":
            data = np.repeat(self.data, k, axis=0)
            bw = lambda g: (g.reshape((n, k) + rest).sum(axis=1),)
        elif layout == "replicate":
            data = np.tile(self.data, (k,) + (1,) * len(rest))
            bw = lambda g: (g.reshape((k, n) + rest).sum(axis=0),)
        else:
            raise ShapeError(f"unknown repeat layout {layout!r}")
        return Tensor._make(data, (self,), "repeat", bw)

    def __getitem__(self, idx) -> "Tensor":
        shape = self.shape

        basic = isinstance(idx, (slice, int)) or (
            isinstance(idx, tuple) and all(isinstance(i, (slice, int)) or i is Ellipsis for i in idx)
        )

        def bw(g):
            full = np.zeros(shape)
            if basic:
                full[idx] = g
            else:
                np.add.at(full, idx, g)
            return (full,)

        return Tensor._make(self.data[idx], (self,), "getitem", bw)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def softplus(x: np.ndarray) -> np.ndarray:
    """Numerically stable ``ln(1 + e^x)``."""
    return np.logaddexp(0.0, x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return expit(x)
