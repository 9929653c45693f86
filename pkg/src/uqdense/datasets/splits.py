"""Train/validation/test index splits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

SECONDS_PER_WEEK = 7 * 86400


@dataclass
class SplitIndex:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.validation), len(self.test)

    def is_disjoint(self) -> bool:
        a, b, c = (set(map(int, s)) for s in (self.train, self.validation, self.test))
        return not (a & b or a & c or b & c)

    def to_dict(self) -> dict:
        return {"train": self.train.tolist(), "validation": self.validation.tolist(), "test": self.test.tolist()}


def _check_ratios(ratios):
    r = np.asarray(ratios, dtype=np.float64)
    if r.shape != (3,) or np.any(r < 0) or abs(r.sum() - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must be three nonnegative numbers summing to 1, got {ratios}")
    return r


def _sizes(n, r):
    n_train = int(np.floor(r[0] * n + 1e-9))
    n_val = int(np.floor(r[1] * n + 1e-9))
    return n_train, n_val, n - n_train - n_val


def split_global(n: int, ratios=(0.6, 0.2, 0.2)) -> SplitIndex:
    """Contiguous chronological blocks; train and validation sizes are floored,
    the remainder goes to test."""
    r = _check_ratios(ratios)
    if n < 3:
        raise ConfigError(f"need at least 3 samples to split, got {n}")
    a, b, _ = _sizes(n, r)
    if a == 0 or b == 0 or n - a - b == 0:
        raise ConfigError(f"n={n} leaves an empty split with ratios {tuple(r)}")
    idx = np.arange(n)
    return SplitIndex(idx[:a], idx[a : a + b], idx[a + b :])


def split_random(n: int, ratios=(0.6, 0.2, 0.2), seed: int = 0) -> SplitIndex:
    """Same sizes as :func:`split_global` over a seeded permutation."""
    r = _check_ratios(ratios)
    if n < 3:
        raise ConfigError(f"need at least 3 samples to split, got {n}")
    a, b, _ = _sizes(n, r)
    perm = np.random.default_rng(seed).permutation(n)
    return SplitIndex(np.sort(perm[:a]), np.sort(perm[a : a + b]), np.sort(perm[a + b :]))


def split_rolling(n_samples: int, cadence_s: float = 10.0, block_weeks=(8, 1, 1)) -> SplitIndex:
    """Repeating [train | validation | test] blocks of whole weeks.

    A trailing partial cycle is filled in the same order until data runs out.
    """
    week = SECONDS_PER_WEEK / cadence_s
    if abs(week - round(week)) > 1e-9:
        raise ConfigError(f"cadence {cadence_s}s does not divide a week")
    blocks = [w * week for w in block_weeks]
    if any(abs(b - round(b)) > 1e-9 or b <= 0 for b in blocks):
        raise ConfigError(f"block lengths {block_weeks} weeks are not whole positive sample counts")
    blocks = [int(round(b)) for b in blocks]
    cycle = sum(blocks)
    if n_samples < cycle:
        raise ConfigError(f"{n_samples} samples is less than one {cycle}-sample cycle")
    pos = np.arange(n_samples) % cycle
    tr = np.flatnonzero(pos < blocks[0])
    va = np.flatnonzero((pos >= blocks[0]) & (pos < blocks[0] + blocks[1]))
    te = np.flatnonzero(pos >= blocks[0] + blocks[1])
    return SplitIndex(tr, va, te)


def contiguous_segments(idx: np.ndarray) -> list[tuple[int, int]]:
    """(start, stop) pairs of runs of consecutive indices."""
    idx = np.asarray(idx)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) != 1)
    starts = np.concatenate([[0], breaks + 1])
    stops = np.concatenate([breaks, [idx.size - 1]])
    return [(int(idx[a]), int(idx[b]) + 1) for a, b in zip(starts, stops)]
