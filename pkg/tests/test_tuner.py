import json

import numpy as np
import pytest

from uqdense.datasets import split_random
from uqdense.errors import ConfigError, SearchError
from uqdense.nn.train import TrainingData
from uqdense.tuner import (
    POOL_SIZE,
    SearchSpace,
    encode_spec,
    gp_guided_search,
    gp_posterior,
    make_trainer,
    random_search,
    sample_spec,
    tuning_data,
)

SMALL = SearchSpace(n_layers=(1, 3), units=(2, 8), activations=("tanh", "relu"), dropout=(0.05, 0.3),
                    optimizers=("adam", "sgd"), learning_rate=(1e-4, 1e-2))


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(60, 2))
    y = x[:, :1] ** 2
    return TrainingData(x[:40], y[:40], x[40:], y[40:])


def bowl(spec, data, loss_kind, seed):
    """Stub objective: quadratic bowl over encoded mean dropout and log learning rate."""
    e = encode_spec(spec, SMALL)
    return (e[2] - 0.3) ** 2 + (e[3] - 0.7) ** 2, None


def test_space_validation_and_roundtrip():
    with pytest.raises(ConfigError):
        SearchSpace(units=(10, 5))
    with pytest.raises(ConfigError):
        SearchSpace(dropout=(0.1, 1.0))
    with pytest.raises(ConfigError):
        SearchSpace.from_dict({"layers": [1, 2]})
    assert SearchSpace.from_dict(SMALL.to_dict()) == SMALL


def test_sampled_specs_stay_in_space():
    rng = np.random.default_rng(1)
    specs = [sample_spec(SMALL, rng) for _ in range(500)]
    assert all(SMALL.contains(s) for s in specs)
    lrs = np.log10([s.learning_rate for s in specs])
    # log-uniform: about half the draws below the geometric midpoint
    assert 0.4 < np.mean(lrs < -3) < 0.6
    enc = np.array([encode_spec(s, SMALL) for s in specs])
    assert np.all((enc >= 0) & (enc <= 1))


def test_single_trial(data):
    out = random_search(SMALL, data, "mse", 1, seed=3, trainer=bowl)
    assert len(out) == 1 and out[0].index == 0


def test_random_search_is_deterministic_and_ranked(data):
    a = random_search(SMALL, data, "mse", 12, seed=5, trainer=bowl)
    b = random_search(SMALL, data, "mse", 12, seed=5, trainer=bowl)
    assert [t.to_dict() for t in a] == [t.to_dict() for t in b]
    losses = [t.validation_loss for t in a]
    assert losses == sorted(losses)


def test_stub_minimum_is_found_among_samples(data):
    out = random_search(SMALL, data, "mse", 20, seed=9, trainer=bowl)
    exhaustive = min(out, key=lambda t: bowl(t.spec, data, "mse", 0)[0])
    assert out[0].index == exhaustive.index


def test_no_guided_trials_reduces_to_random(data):
    a = gp_guided_search(SMALL, data, "mse", n_random=6, n_guided=0, seed=2, trainer=bowl)
    b = random_search(SMALL, data, "mse", 6, seed=2, trainer=bowl)
    assert [t.to_dict() for t in a] == [t.to_dict() for t in b]


def test_guided_phase_improves_on_random(data):
    wins = 0
    for seed in range(10):
        out = gp_guided_search(SMALL, data, "mse", n_random=5, n_guided=10, seed=seed, trainer=bowl)
        rand = min(t.validation_loss for t in out if t.phase == "random")
        guided = min(t.validation_loss for t in out if t.phase != "random")
        wins += guided < rand
    assert wins >= 8


def test_surrogate_is_finite_on_pool():
    rng = np.random.default_rng(4)
    specs = [sample_spec(SMALL, rng) for _ in range(6)]
    x = np.array([encode_spec(s, SMALL) for s in specs])
    # duplicate a point to stress conditioning
    x = np.vstack([x, x[:1]])
    y = np.r_[rng.normal(size=6), 0.0]
    pool = np.array([encode_spec(sample_spec(SMALL, rng), SMALL) for _ in range(POOL_SIZE)])
    mu, sd = gp_posterior(x, y, pool)
    assert np.all(np.isfinite(mu)) and np.all(np.isfinite(sd)) and np.all(sd > 0)


def test_failed_trials_are_flagged(data, tmp_path):
    def flaky(spec, data, loss_kind, seed):
        return (float("nan"), None) if spec.optimizer == "sgd" else bowl(spec, data, loss_kind, seed)

    log = tmp_path / "trials.jsonl"
    out = random_search(SMALL, data, "mse", 10, seed=0, trainer=flaky, log_path=log)
    assert len(out) == 10
    failed = [t for t in out if t.failed]
    assert failed and all(t.error for t in failed)
    assert out[-len(failed):] == failed
    lines = [json.loads(s) for s in log.read_text().splitlines()]
    assert [d["index"] for d in lines] == list(range(10))
    assert all(d["validation_loss"] is None for d in lines if d["failed"])
    with pytest.raises(SearchError):
        random_search(SMALL, data, "mse", 3, trainer=lambda *a: (float("inf"), None))


def test_tuning_never_sees_test_rows():
    n = 50
    x = np.arange(n, dtype=np.float64)[:, None]
    y = x.copy()
    split = split_random(n, seed=1)
    seen = set()

    def spy(spec, d, loss_kind, seed):
        seen.update(d.x_train[:, 0].astype(int).tolist())
        seen.update(d.x_val[:, 0].astype(int).tolist())
        return 1.0, None

    random_search(SMALL, tuning_data(x, y, split), "mse", 3, trainer=spy)
    assert seen.isdisjoint(split.test.tolist())
    assert seen == set(split.train.tolist()) | set(split.validation.tolist())
    with pytest.raises(ConfigError):
        random_search(SMALL, (x, y), "mse", 1, trainer=spy)


def test_default_trainer_runs(data):
    out = random_search(SMALL, data, "mse", 2, seed=0, trainer=make_trainer(epochs=3, batch_size=16))
    assert all(np.isfinite(t.validation_loss) for t in out)
    assert out[0].history["best_epoch"] >= 0
