import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from uqdense.errors import ConfigError, ShapeError
from uqdense.losses import SIGMA_FLOOR, mse, nlpd, nlpd_mc

HALF_LOG_2PI = 0.9189385332046727


def test_mse_hand_values():
    assert mse([[0.0, 0.0]], [[0.0, 0.0]]).value == 0.0
    assert mse(np.array([[0.0, 0.0]]), np.array([[1.0, 3.0]])).value == 5.0


def test_mse_two_pass_oracle():
    rng = np.random.default_rng(0)
    y, yh = rng.normal(size=(37, 3)), rng.normal(size=(37, 3))
    total = 0.0
    for a, b in zip(y.ravel(), yh.ravel()):
        total += (a - b) ** 2
    lv = mse(y, yh)
    assert lv.value == pytest.approx(total / y.size, abs=1e-12)
    assert lv.value == pytest.approx(lv.per_sample.mean(), abs=1e-12)


def test_nlpd_hand_values():
    assert nlpd([[1.0]], [[1.0]], [[1.0]]).value == pytest.approx(HALF_LOG_2PI, abs=1e-12)
    assert nlpd([[0.0]], [[1.0]], [[1.0]]).value == pytest.approx(0.5 + HALF_LOG_2PI, abs=1e-12)


def test_nlpd_matches_scipy_logpdf():
    rng = np.random.default_rng(1)
    y, mu = rng.normal(size=(50, 2)), rng.normal(size=(50, 2))
    sd = rng.uniform(0.1, 3.0, size=(50, 2))
    assert nlpd(y, mu, sd).value == pytest.approx(-norm.logpdf(y, mu, sd).mean(), abs=1e-12)


def test_nlpd_minimized_at_residual():
    r = 0.7
    grid = np.linspace(0.05, 3.0, 5901)
    vals = [nlpd([[r]], [[0.0]], [[s]]).value for s in grid]
    assert grid[int(np.argmin(vals))] == pytest.approx(r, abs=1e-3)


def test_nlpd_floor():
    lv = nlpd([[0.0]], [[0.0]], [[0.0]])
    assert lv.value == pytest.approx(math.log(SIGMA_FLOOR) + HALF_LOG_2PI)


def test_nlpd_mc_zero_spread_hits_floor():
    preds = np.full((3, 5, 1), 2.0)
    lv = nlpd_mc(np.full((3, 1), 2.0), preds)
    assert lv.value == pytest.approx(0.5 * math.log(2 * math.pi * SIGMA_FLOOR**2), abs=1e-12)


def test_nlpd_mc_two_point_spread():
    lv = nlpd_mc(np.array([[1.0]]), np.array([[[0.0], [2.0]]]))
    assert lv.value == pytest.approx(HALF_LOG_2PI, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 9), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_nlpd_mc_composition_oracle(k, n_out, seed):
    rng = np.random.default_rng(seed)
    preds = rng.normal(size=(6, k, n_out))
    y = rng.normal(size=(6, n_out))
    mu = preds.mean(axis=1)
    sd = np.sqrt(((preds - mu[:, None, :]) ** 2).mean(axis=1))
    assert nlpd_mc(y, preds).value == pytest.approx(nlpd(y, mu, sd).value, abs=1e-12)


def test_shape_guards():
    with pytest.raises(ShapeError):
        mse(np.zeros((2, 1)), np.zeros((2, 2)))
    with pytest.raises(ShapeError):
        nlpd_mc(np.zeros((2, 1)), np.zeros((2, 3)))
    with pytest.raises(ConfigError):
        nlpd_mc(np.zeros((2, 1)), np.zeros((2, 1, 1)))
