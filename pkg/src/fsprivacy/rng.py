"""Counter-based Gaussian noise streams.

Every normal variate is a pure function of ``(seed, tag, trial, stream)``:

    k1 = splitmix64(splitmix64(seed) ^ tag)
    k3 = splitmix64(splitmix64(k1 ^ trial) ^ stream)
    a  = splitmix64(k3);  b = splitmix64(a)
    u1 = ((a >> 11) + 1) / 2**53          # in (0, 1]
    u2 = (b >> 11) / 2**53                # in [0, 1)
    z  = sqrt(-2 ln u1) * cos(2 pi u2)    # Box-Muller, cosine branch

so Monte Carlo trials can be generated in any order or in parallel and still
reproduce the same numbers. ``tag`` separates independent uses of one seed
(scenario branches, polynomial degrees).
"""
from __future__ import annotations

import secrets

import numpy as np

from . import _backend
from ._fallback import splitmix64

_U64 = (1 << 64) - 1


def fresh_seed() -> int:
    """A random 63-bit seed, for configs that do not pin one."""
    return secrets.randbits(63)


class CounterRNG:
    """Seeded handle for the counter-based normal generator."""

    def __init__(self, seed: int, tag: int = 0):
        self.seed = int(seed) & _U64
        self.tag = int(tag) & _U64

    def __repr__(self) -> str:
        return f"CounterRNG(seed={self.seed}, tag={self.tag})"

    def __eq__(self, other) -> bool:
        return isinstance(other, CounterRNG) and (self.seed, self.tag) == (other.seed, other.tag)

    def __hash__(self) -> int:
        return hash((self.seed, self.tag))

    def substream(self, tag: int) -> "CounterRNG":
        """Independent stream under the same seed; tags combine by hashing."""
        mixed = np.uint64(self.tag) ^ splitmix64(np.uint64(int(tag) & _U64))
        return CounterRNG(self.seed, int(splitmix64(mixed)))

    def normals(self, trials, streams) -> np.ndarray:
        """Standard normals, shape ``(len(trials), len(streams))``."""
        trials = np.ascontiguousarray(np.atleast_1d(trials), dtype=np.int64)
        streams = np.ascontiguousarray(np.atleast_1d(streams), dtype=np.int64)
        if trials.size and trials.min() < 0:
            raise ValueError("trial indices must be non-negative")
        if streams.size and streams.min() < 0:
            raise ValueError("stream indices must be non-negative")
        u1, u2 = _backend.counter_uniforms(self.seed, self.tag, trials, streams)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

