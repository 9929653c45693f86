import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from uqdense.errors import ShapeError
from uqdense.nn import Tensor, no_grad, sigmoid, softplus


def numeric_grad(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def analytic_grad(build, x):
    t = Tensor(x.copy(), requires_grad=True)
    build(t).sum().backward()
    return t.grad


def value(build):
    return lambda a: build(Tensor(a)).sum().item()


UNARY = {
    "exp": lambda t: t.exp(),
    "log": lambda t: (t * t + 1.0).log(),
    "sqrt": lambda t: (t * t + 0.5).sqrt(),
    "relu": lambda t: t.relu(),
    "tanh": lambda t: t.tanh(),
    "sigmoid": lambda t: t.sigmoid(),
    "softplus": lambda t: t.softplus(),
    "square": lambda t: t.square(),
    "div": lambda t: 1.0 / (t * t + 1.0),
    "neg_sub": lambda t: 2.0 - (-t),
    "mean0": lambda t: t.mean(axis=0),
    "std1": lambda t: t.std(axis=1),
    "std1_ddof": lambda t: t.std(axis=1, ddof=1),
    "reshape": lambda t: t.reshape(-1) * np.arange(12.0),
    "getitem": lambda t: t[1:, ::2] * 3.0,
    "floor": lambda t: t.floor_at(0.1),
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_ops_match_finite_differences(name):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 4))
    # keep relu and floor away from their kinks
    x[np.abs(x) < 0.05] = 0.3
    x[np.abs(x - 0.1) < 0.05] = 0.4
    f = UNARY[name]
    np.testing.assert_allclose(analytic_grad(f, x), numeric_grad(value(f), x), rtol=1e-6, atol=1e-8)


def test_binary_broadcast_grads():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(4, 3))
    b = rng.normal(size=(3,))
    ta, tb = Tensor(a, requires_grad=True), Tensor(b, requires_grad=True)
    ((ta * tb + ta / (tb * tb + 1.0) - tb).square()).sum().backward()

    def f(a_, b_):
        return float(np.sum((a_ * b_ + a_ / (b_ * b_ + 1.0) - b_) ** 2))

    np.testing.assert_allclose(ta.grad, numeric_grad(lambda v: f(v, b), a), rtol=1e-6)
    np.testing.assert_allclose(tb.grad, numeric_grad(lambda v: f(a, v), b), rtol=1e-6)


def test_matmul_gradient_is_input():
    # loss = sum(W x) with x fixed: dL/dW[i, j] = x[j]
    x = np.array([[1.0, -2.0, 3.0]])
    w = Tensor(np.zeros((2, 3)), requires_grad=True)
    (Tensor(x) @ w.T).sum().backward()
    np.testing.assert_array_equal(w.grad, np.tile(x, (2, 1)))


def test_softplus_derivative_is_sigmoid():
    x = np.linspace(-30, 30, 10_001)
    t = Tensor(x, requires_grad=True)
    t.softplus().sum().backward()
    assert np.max(np.abs(t.grad - sigmoid(x))) < 1e-12


def test_softplus_stable_values():
    assert softplus(np.array([0.0]))[0] == pytest.approx(np.log(2.0), abs=1e-15)
    assert softplus(np.array([800.0]))[0] == 800.0
    assert 0 < softplus(np.array([-40.0]))[0] < 1e-17
    assert np.all(np.isfinite(sigmoid(np.array([-1000.0, 1000.0]))))


def test_repeat_rows_layouts():
    x = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
    s = x.repeat_rows(2, "sample")
    r = x.repeat_rows(2, "replicate")
    np.testing.assert_array_equal(s.data, np.repeat(x.data, 2, axis=0))
    np.testing.assert_array_equal(r.data, np.tile(x.data, (2, 1)))
    w = np.arange(12.0).reshape(6, 2)
    (s * w).sum().backward()
    np.testing.assert_array_equal(x.grad, w.reshape(3, 2, 2).sum(axis=1))
    x.zero_grad()
    (r * w).sum().backward()
    np.testing.assert_array_equal(x.grad, w.reshape(2, 3, 2).sum(axis=0))
    with pytest.raises(ShapeError):
        x.repeat_rows(2, "diagonal")


def test_grad_accumulates_over_shared_use():
    x = Tensor(np.array([2.0]), requires_grad=True)
    (x * x + x).sum().backward()
    assert x.grad[0] == pytest.approx(5.0)


def test_no_grad_records_nothing():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = (x * 2.0).sum()
    assert not y.requires_grad


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (5,), elements=st.floats(-5, 5)))
def test_std_reduction_matches_numpy(a):
    t = Tensor(a.reshape(1, 5))
    assert t.std(axis=1).data[0] == pytest.approx(np.std(a), abs=1e-12)
