"""Wall-clock comparison of the two ways to get probabilistic predictions.

MC dropout needs ``k`` stochastic passes per input.  The direct model needs
one deterministic pass plus ``n_draws`` Gaussian samples per input.  Each
timing is repeated and the median is reported.
"""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..nn.model import MlpModel
from ..uq import DEFAULT_BATCH_ROWS, DEFAULT_CHUNK, direct_predict, mc_dropout_predict, sample_gaussian

WEEK_SAMPLES = 8640  # one week at 10 s cadence
TEN_WEEK_SAMPLES = 86400


@dataclass
class BenchRow:
    method: str
    n_samples: int
    times: list[float]

    @property
    def median(self) -> float:
        return float(np.median(self.times))


@dataclass
class BenchResult:
    rows: list[BenchRow]
    k: int
    n_draws: int
    repeats: int
    chunk_size: int
    batch_rows: int
    model_sizes: dict = field(default_factory=dict)

    def median(self, method: str, n_samples: int) -> float:
        for r in self.rows:
            if r.method == method and r.n_samples == n_samples:
                return r.median
        raise KeyError((method, n_samples))

    def ratio(self, n_samples: int) -> float:
        return self.median("mc_dropout", n_samples) / self.median("direct_prob", n_samples)

    def table(self) -> list[dict]:
        """Method / samples / median run time rows, shaped like the published table."""
        return [{"method": r.method, "samples": r.n_samples, "cpu_seconds": r.median} for r in self.rows]

    def to_dict(self) -> dict:
        sizes = sorted({r.n_samples for r in self.rows})
        return {
            "k": self.k,
            "n_draws": self.n_draws,
            "repeats": self.repeats,
            "chunk_size": self.chunk_size,
            "batch_rows": self.batch_rows,
            "model_parameters": self.model_sizes,
            "table": self.table(),
            "runs": [{"method": r.method, "samples": r.n_samples, "times": r.times} for r in self.rows],
            "ratio_mc_over_direct": {str(n): self.ratio(n) for n in sizes},
            "machine": platform.machine(),
        }


def _inputs_for(x: np.ndarray, n: int) -> np.ndarray:
    reps = -(-n // len(x))
    return np.tile(x, (reps, 1))[:n]


def _time(fn, repeats: int) -> list[float]:
    out = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return out


def benchmark_runtime(model_mc: MlpModel, model_direct: MlpModel, x, n_samples=(WEEK_SAMPLES, TEN_WEEK_SAMPLES),
                      k: int = 1000, n_draws: int = 1000, repeats: int = 3, chunk_size: int = DEFAULT_CHUNK,
                      batch_rows: int = DEFAULT_BATCH_ROWS, seed: int = 0) -> BenchResult:
    """Median run times of MC dropout and direct prediction at each sample count.

    ``x`` is a pool of physical-unit inputs; it is tiled or truncated to each
    requested sample count.
    """
    if repeats < 3:
        raise ConfigError("benchmark needs at least 3 repetitions")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise ConfigError("benchmark inputs must be a non-empty 2-D array")
    rows = []
    for n in n_samples:
        xn = _inputs_for(x, int(n))
        rows.append(BenchRow("mc_dropout", int(n), _time(
            lambda: mc_dropout_predict(model_mc, xn, k=k, seed=seed, chunk_size=chunk_size, batch_rows=batch_rows),
            repeats)))
    for n in n_samples:
        xn = _inputs_for(x, int(n))
        rows.append(BenchRow("direct_prob", int(n), _time(
            lambda: sample_gaussian(direct_predict(model_direct, xn), n_draws, seed=seed), repeats)))
    sizes = {"mc_dropout": model_mc.n_parameters(), "direct_prob": model_direct.n_parameters()}
    return BenchResult(rows, k, n_draws, repeats, chunk_size, batch_rows, sizes)
