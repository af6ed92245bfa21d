"""Seedable, portable random number generator.

The simulator and stimulus tooling must produce byte-identical output for a
given seed on every platform, so we avoid library RNGs whose stream is an
implementation detail and use xoshiro256** with splitmix64 seeding.  The
exact constants are documented in the README; any reimplementation using
them reproduces our traces bit for bit.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int):
    """Yield the splitmix64 sequence starting from seed ``x``."""
    while True:
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Rng:
    """xoshiro256** seeded via splitmix64 from a single 64-bit integer."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be >= 0, got {seed}")
        sm = _splitmix64(seed & _MASK64)
        self._s = [next(sm) for _ in range(4)]
        # splitmix64 never yields four zeros, but guard the degenerate state
        if not any(self._s):
            self._s[0] = 1

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform double in [0, 1) using the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def gauss(self) -> float:
        """Standard normal via Box-Muller (no spare caching: one value per
        two uniforms, so the draw order is trivially reproducible)."""
        u1 = self.uniform()
        u2 = self.uniform()
        # avoid log(0)
        while u1 == 0.0:
            u1 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def choice2(self) -> int:
        """Fair pick of 0 or 1."""
        return self.next_u64() & 1
