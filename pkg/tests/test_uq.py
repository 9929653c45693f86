import numpy as np
import pytest
from scipy.stats import norm

from uqdense.datasets import Scaler
from uqdense.errors import ConfigError, NumericError, ShapeError
from uqdense.losses import SIGMA_FLOOR
from uqdense.nn import DROPOUT, Architecture, DenseLayer, MlpModel, ReplicateMasks, Tensor, init_model, predict_raw
from uqdense.uq import (
    ProbPrediction,
    direct_predict,
    mc_dropout_predict,
    mc_dropout_replicates,
    prediction_interval,
    sample_gaussian,
    z_for_level,
)


@pytest.fixture
def mc_model():
    m = init_model(Architecture(3, 2, [16, 12], ["tanh", "relu"], [0.1, 0.25]), seed=2)
    m.output_scaler = Scaler(np.array([1.0, -2.0]), np.array([2.0, 0.5]))
    return m


def test_prob_prediction_invariants():
    with pytest.raises(ShapeError):
        ProbPrediction(np.zeros(3), np.ones(2))
    with pytest.raises(NumericError):
        ProbPrediction(np.zeros(2), np.array([1.0, 0.0]))


def test_mc_matches_naive_replicate_loop(mc_model):
    x = np.random.default_rng(0).normal(size=(7, 3))
    k = 23
    xs = mc_model.input_scaler.apply(x)
    outs = np.stack([
        predict_raw(mc_model, xs, DROPOUT, masks=ReplicateMasks(5, [j], 0, 7), scaled_input=True) for j in range(k)
    ])
    mu = mc_model.output_scaler.invert(outs.mean(axis=0))
    sd = outs.std(axis=0) * mc_model.output_scaler.std
    p = mc_dropout_predict(mc_model, x, k=k, seed=5)
    np.testing.assert_allclose(p.mu, mu, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(p.sigma, sd, rtol=1e-10)


def test_mc_chunking_does_not_change_result(mc_model):
    x = np.random.default_rng(1).normal(size=(11, 3))
    ref = mc_dropout_predict(mc_model, x, k=40, seed=3)
    for chunk, rows in [(1, 2**17), (7, 30), (40, 5), (100, 1)]:
        p = mc_dropout_predict(mc_model, x, k=40, seed=3, chunk_size=chunk, batch_rows=rows)
        np.testing.assert_allclose(p.mu, ref.mu, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(p.sigma, ref.sigma, rtol=1e-10)


def test_mc_rows_are_independent_of_batch(mc_model):
    x = np.random.default_rng(2).normal(size=(6, 3))
    whole = mc_dropout_predict(mc_model, x, k=30, seed=8)
    tail = mc_dropout_predict(mc_model, x[3:], k=30, seed=8)
    # masks are keyed on the row offset within the call, so a sub-batch sees new draws
    assert whole.mu.shape == (6, 2) and tail.mu.shape == (3, 2)
    reps = mc_dropout_replicates(mc_model, x, [4, 9], seed=8)
    again = mc_dropout_replicates(mc_model, x, [9], seed=8)
    np.testing.assert_array_equal(reps[1], again[0])


def test_mc_is_deterministic_for_fixed_seed(mc_model):
    x = np.ones((1, 3))
    a = mc_dropout_predict(mc_model, x, k=1000, seed=0)
    b = mc_dropout_predict(mc_model, x, k=1000, seed=0)
    np.testing.assert_array_equal(a.mu, b.mu)
    np.testing.assert_array_equal(a.sigma, b.sigma)


def test_mc_without_dropout_collapses_to_floor():
    m = init_model(Architecture(2, 1, [5]), seed=0)
    x = np.random.default_rng(0).normal(size=(4, 2))
    p = mc_dropout_predict(m, x, k=10)
    np.testing.assert_allclose(p.mu, predict_raw(m, x), rtol=1e-14)
    np.testing.assert_array_equal(p.sigma, SIGMA_FLOOR)


def test_mc_linear_input_dropout_expectation():
    pre = DenseLayer(Tensor(np.eye(2)), Tensor(np.zeros(2)), "linear", 0.4)
    lin = DenseLayer(Tensor(np.array([[1.5, -0.5]])), Tensor(np.array([0.2])), "linear", 0.0)
    m = MlpModel([pre, lin], 2, 1)
    x = np.array([[1.0, 3.0]])
    k = 100_000
    p = mc_dropout_predict(m, x, k=k, seed=1)
    exact = predict_raw(m, x)[0, 0]
    assert abs(p.mu[0, 0] - exact) < 3 * p.sigma[0, 0] / np.sqrt(k)


def test_mc_guards(mc_model):
    with pytest.raises(ConfigError):
        mc_dropout_predict(mc_model, np.ones((1, 3)), k=1)
    with pytest.raises(ConfigError):
        mc_dropout_predict(init_model(Architecture(3, 1, [4], head="direct"), seed=0), np.ones((1, 3)))


def direct_layer(a, b, scale=1.0):
    layer = DenseLayer(Tensor(np.zeros((2, 1))), Tensor(np.array([a, b])), "linear", 0.0)
    return MlpModel([layer], 1, 1, "direct", output_scaler=Scaler(np.array([0.0]), np.array([scale])))


def test_direct_softplus_and_floor():
    p = direct_predict(direct_layer(0.3, 0.0, scale=2.0), np.zeros((1, 1)))
    assert p.mu[0, 0] == pytest.approx(0.6)
    assert p.sigma[0, 0] == pytest.approx(np.log(2.0) * 2.0, rel=1e-15)
    p = direct_predict(direct_layer(0.0, -40.0, scale=2.0), np.zeros((1, 1)))
    assert p.sigma[0, 0] == pytest.approx(SIGMA_FLOOR * 2.0)


def test_direct_is_deterministic():
    m = init_model(Architecture(3, 2, [8], head="direct"), seed=4)
    x = np.random.default_rng(0).normal(size=(5, 3))
    a, b = direct_predict(m, x), direct_predict(m, x)
    np.testing.assert_array_equal(a.mu, b.mu)
    np.testing.assert_array_equal(a.sigma, b.sigma)
    with pytest.raises(ConfigError):
        direct_predict(init_model(Architecture(3, 2, [8]), seed=0), x)


def test_sample_gaussian_moments():
    d = sample_gaussian(ProbPrediction(np.zeros((1, 1)), np.ones((1, 1))), 100_000, seed=3)
    assert d.shape == (1, 100_000, 1)
    assert abs(d.mean()) < 0.02
    assert 0.99 <= d.std() <= 1.01
    np.testing.assert_array_equal(d, sample_gaussian(ProbPrediction(np.zeros((1, 1)), np.ones((1, 1))), 100_000, 3))


def test_sample_gaussian_near_degenerate():
    eps = 1e-9
    d = sample_gaussian(ProbPrediction(np.full((2, 1), 4.0), np.full((2, 1), eps)), 1000, seed=0)
    assert np.all(np.abs(d - 4.0) <= 5 * eps)


@pytest.mark.parametrize("p", [1e-6, 0.05, 0.5, 0.9, 0.95, 0.99, 1 - 1e-10])
def test_z_for_level_matches_scipy(p):
    assert z_for_level(p) == pytest.approx(norm.ppf(0.5 + 0.5 * p), rel=1e-12)


def test_z_hand_values_and_interval():
    assert z_for_level(0.90) == pytest.approx(1.644854, abs=1e-6)
    assert z_for_level(0.99) == pytest.approx(2.575829, abs=1e-6)
    pred = ProbPrediction(np.array([1.0]), np.array([2.0]))
    lo, hi = prediction_interval(pred, 1e-12)
    assert lo[0] == pytest.approx(1.0) and hi[0] == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        z_for_level(1.0)
