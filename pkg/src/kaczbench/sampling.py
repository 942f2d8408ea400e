"""Deterministic seeded randomness: worker streams and weighted row sampling.

Streams are PCG64 generators keyed by a ``SeedSequence`` over the entropy
tuple ``(base_seed, worker_id)``.  numpy's SeedSequence hashing is platform
independent, so a given pair reproduces the same draws in any process.
Worker 0 is, by definition, the stream the sequential solvers consume;
the parallel and distributed solvers hand stream ``t`` to worker ``t``,
which is what makes their row sequences replayable ahead of time.

Row indices are drawn from the distribution that weights each row by its
squared norm relative to the (restricted) squared Frobenius norm.  Sampling
is a binary search over the cumulative distribution, one uniform per draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyRangeError
from .linalg import RowNormCache

__all__ = [
    "Prng",
    "RowSampler",
    "make_sampler",
    "partition_bounds",
    "sample",
    "worker_rng",
]


class Prng:
    """A deterministic PCG64 stream identified by an entropy tuple.

    ``Prng(seed)`` is the base stream for ``seed``; extra integers select
    derived streams (``Prng(seed, worker_id)``, ``Prng(seed, tag, m, n)``).
    Identical tuples always produce identical draw sequences.
    """

    __slots__ = ("seed", "stream", "_gen")

    def __init__(self, seed: int, *stream: int):
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        ss = np.random.SeedSequence(entropy=(self.seed, *self.stream))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def random(self) -> float:
        """One uniform draw in [0, 1)."""
        return float(self._gen.random())

    def uniform(self, lo: float, hi: float, size=None):
        return self._gen.uniform(lo, hi, size=size)

    def normal(self, mu: float, sigma: float, size=None):
        return self._gen.normal(mu, sigma, size=size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size=size)

    def __repr__(self) -> str:
        return f"Prng(seed={self.seed}, stream={self.stream})"


def worker_rng(base_seed: int, worker_id: int) -> Prng:
    """Independent stream for one worker.

    Worker 0 of any base seed is exactly the stream the sequential solvers
    use for that seed, so a parallel run with q workers replays wholly
    predetermined per-worker row sequences.
    """
    return Prng(base_seed, worker_id)


@dataclass(frozen=True)
class RowSampler:
    """Weighted sampler over the inclusive row range [support_lo, support_hi].

    ``cdf[j]`` is the cumulative probability of rows ``support_lo .. lo+j``;
    the final entry is 1.0 by construction.
    """

    cdf: np.ndarray
    support_lo: int
    support_hi: int

    def sample(self, rng: Prng) -> int:
        u = rng.random()
        j = int(np.searchsorted(self.cdf, u, side="right"))
        if j >= self.cdf.shape[0]:  # u landed on the closed upper edge
            j = self.cdf.shape[0] - 1
        return self.support_lo + j

    def probabilities(self) -> np.ndarray:
        """Exact per-row probabilities recovered from the cdf."""
        return np.diff(self.cdf, prepend=0.0)


def make_sampler(cache: RowNormCache, lo: int = 0, hi: int | None = None) -> RowSampler:
    """Sampler over rows ``lo..hi`` with probabilities ``sq_norms[i] / sum``."""
    m = cache.m
    if hi is None:
        hi = m - 1
    if not (0 <= lo <= hi < m):
        raise EmptyRangeError(f"row range [{lo}, {hi}] invalid for m={m}")
    cdf = np.cumsum(cache.sq_norms[lo : hi + 1])
    cdf /= cdf[-1]
    cdf.flags.writeable = False
    return RowSampler(cdf=cdf, support_lo=lo, support_hi=hi)


def sample(sampler: RowSampler, rng: Prng) -> int:
    """Draw one row index from ``sampler`` using ``rng``."""
    return sampler.sample(rng)


def partition_bounds(m: int, parts: int, idx: int) -> tuple[int, int]:
    """Inclusive bounds of contiguous block ``idx`` when m rows split q ways.

    Block t spans ``floor(t*m/q) .. floor((t+1)*m/q) - 1``; the blocks of all
    t partition ``[0, m)`` exactly.
    """
    if not (0 <= idx < parts):
        raise EmptyRangeError(f"block index {idx} out of range for {parts} blocks")
    lo = (idx * m) // parts
    hi = ((idx + 1) * m) // parts - 1
    if hi < lo:
        raise EmptyRangeError(f"block {idx} of {parts} is empty for m={m}")
    return lo, hi
