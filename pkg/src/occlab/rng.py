"""Counter-based random streams.

Every random word is a pure function of ``(key, a, b, j)``: a 64-bit stream key
and up to three integer coordinates (typically time step, site and word index).
Keys are derived from a master seed and a replicate index, so a Monte-Carlo
batch gives the same numbers no matter how replicates are scheduled.

The mixing function is the SplitMix64 finalizer (Steele, Lea & Flood 2014);
``word(key, a, b, j)`` hashes the coordinates into a sub-key and reads the
SplitMix64 sequence of that sub-key at position ``j``.
"""
from __future__ import annotations

import numba as nb
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_A_MUL = np.uint64(0xD6E8FEB86659FD93)
_B_MUL = np.uint64(0xA0761D6478BD642F)
_TWO_M53 = 1.0 / 9007199254740992.0

# Sub-stream tags.
FIELD = 1
WALK = 2
INIT = 3


@nb.njit(cache=True, inline="always")
def mix64(z):
    z = np.uint64(z)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True, inline="always")
def subkey(key, a, b):
    h = mix64(np.uint64(key) ^ (np.uint64(np.int64(a)) * _A_MUL))
    return mix64(h ^ (np.uint64(np.int64(b)) * _B_MUL) ^ GOLDEN)


@nb.njit(cache=True, inline="always")
def word(key, a, b, j):
    k = subkey(key, a, b)
    return mix64(k + np.uint64(j + 1) * GOLDEN)


@nb.njit(cache=True, inline="always")
def uniform(key, a, b, j):
    """Double in [0, 1) with 53 random bits."""
    return np.float64(word(key, a, b, j) >> np.uint64(11)) * _TWO_M53


@nb.njit(cache=True, inline="always")
def popcount64(x):
    x = np.uint64(x)
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return np.int64((x * np.uint64(0x0101010101010101)) >> np.uint64(56))


@nb.njit(cache=True)
def binomial_half(count, key, a, b):
    """Exact Binomial(count, 1/2) draw: the number of set bits among ``count``
    fair random bits."""
    total = 0
    j = 0
    remaining = count
    while remaining >= 64:
        total += popcount64(word(key, a, b, j))
        remaining -= 64
        j += 1
    if remaining > 0:
        mask = (np.uint64(1) << np.uint64(remaining)) - np.uint64(1)
        total += popcount64(word(key, a, b, j) & mask)
    return total


@nb.njit(cache=True)
def poisson_inversion(lam, u):
    """Poisson(lam) by sequential inversion of the CDF at ``u``."""
    if lam <= 0.0:
        return 0
    p = np.exp(-lam)
    cdf = p
    k = 0
    while u >= cdf:
        k += 1
        p *= lam / k
        if p == 0.0 and k > lam:
            break
        cdf += p
    return k


@nb.njit(cache=True)
def replicate_key(master_seed, index):
    base = mix64(np.uint64(master_seed) ^ GOLDEN)
    return mix64(base + np.uint64(index + 1) * GOLDEN)


@nb.njit(cache=True)
def child_key(key, tag):
    return subkey(key, tag, -tag)


class CounterRNG:
    """Handle on one stream key.

    Used by the single-draw API (``sample_WN`` and friends) and by tests; the
    batch kernels work on raw keys directly.
    """

    def __init__(self, key: int):
        self.key = int(key) & 0xFFFFFFFFFFFFFFFF

    @classmethod
    def for_replicate(cls, master_seed: int, index: int) -> "CounterRNG":
        return cls(int(replicate_key(np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF), index)))

    def child(self, tag: int) -> "CounterRNG":
        return CounterRNG(int(child_key(np.uint64(self.key), tag)))

    def word(self, a: int, b: int = 0, j: int = 0) -> int:
        return int(word(np.uint64(self.key), a, b, j))

    def uniform(self, a: int, b: int = 0, j: int = 0) -> float:
        return float(uniform(np.uint64(self.key), a, b, j))

    def __repr__(self) -> str:
        return f"CounterRNG(0x{self.key:016x})"
