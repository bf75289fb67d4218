"""Seeded instance generators.

Randomness comes from splitmix64 so that instance streams can be reproduced
bit-for-bit in any language:

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

all arithmetic mod 2^64.
"""

from __future__ import annotations

import numpy as np

from .zn_core import GroupFn, TWO_PI

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def uniforms(self, k: int) -> np.ndarray:
        return np.array([self.uniform() for _ in range(k)])

    def signs(self, k: int) -> np.ndarray:
        return np.array([1.0 if (self.next_u64() >> 63) else -1.0 for _ in range(k)])

    def sample(self, n: int, k: int) -> list[int]:
        """k distinct values from range(n), partial Fisher-Yates."""
        pool = list(range(n))
        for i in range(min(k, n)):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[: min(k, n)]


def randpm1(N: int, seed: int) -> GroupFn:
    return GroupFn(N, SplitMix64(seed).signs(N))


def rand_interval(N: int, seed: int) -> GroupFn:
    """Values uniform in [-1, 1]."""
    return GroupFn(N, 2.0 * SplitMix64(seed).uniforms(N) - 1.0)


def rand_unimodular(N: int, seed: int) -> GroupFn:
    return GroupFn(N, np.exp(1j * TWO_PI * SplitMix64(seed).uniforms(N)))


def rand_complex_disc(N: int, seed: int) -> GroupFn:
    """Values with modulus <= 1."""
    g = SplitMix64(seed)
    r = np.sqrt(g.uniforms(N))
    return GroupFn(N, r * np.exp(1j * TWO_PI * g.uniforms(N)))


def rand_subset_mask(N: int, seed: int, p: float = 0.5) -> np.ndarray:
    g = SplitMix64(seed)
    return np.array([g.uniform() < p for _ in range(N)], dtype=bool)
