"""Deterministic seeded random streams.

A splitmix64 generator backs every random decision in the pipeline so
that a master seed reproduces identical artifacts byte-for-byte on any
platform, independent of numpy's generator versioning. Child streams
are derived by mixing the master seed with a stream index, so scene i
can be generated in parallel without consuming draws from scene j.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    # splitmix64 finalizer (Steele, Lea & Flood)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


class Rng:
    """Counter-based splitmix64 stream with child-stream derivation."""

    def __init__(self, seed: int):
        self._seed = seed & _MASK64
        self._state = self._seed

    @property
    def seed(self) -> int:
        return self._seed

    def child(self, index: int) -> "Rng":
        """Derive an independent stream: child seed = mix(master, index)."""
        if index < 0:
            raise ValueError("stream index must be non-negative")
        return Rng(_mix(self._seed ^ _mix((index + 1) * _GAMMA & _MASK64)))

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _mix(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, lo: float, hi: float) -> float:
        if hi < lo:
            raise ValueError("uniform bounds reversed")
        return lo + (hi - lo) * self.random()

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        limit = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        if hi < lo:
            raise ValueError("randint bounds reversed")
        return lo + self.randbelow(hi - lo + 1)

    def choice(self, n: int) -> int:
        return self.randbelow(n)

    def distinct_triple(self, n: int) -> tuple[int, int, int]:
        """Three distinct indices in [0, n); used for plane hypotheses."""
        if n < 3:
            raise ValueError("need at least 3 items")
        i = self.randbelow(n)
        j = self.randbelow(n)
        while j == i:
            j = self.randbelow(n)
        k = self.randbelow(n)
        while k == i or k == j:
            k = self.randbelow(n)
        return i, j, k
