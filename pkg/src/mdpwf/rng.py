"""Portable deterministic PRNG for instance generation.

xoshiro256** with splitmix64 seeding, fixed here so generated benchmark
instances are bit-reproducible across platforms and language runtimes.
Platform default generators are deliberately not used.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    """xoshiro256** 1.0 (Blackman & Vigna), 64-bit output."""

    def __init__(self, seed: int):
        # splitmix64 expands the 64-bit seed into the 256-bit state
        s = seed & _MASK
        state = []
        for _ in range(4):
            s = (s + 0x9E3779B97F4A7C15) & _MASK
            z = s
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
            state.append(z ^ (z >> 31))
        self._s = state

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound), rejection-sampled to avoid bias."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (_MASK + 1) - ((_MASK + 1) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi]."""
        return lo + self.below(hi - lo + 1)

    def sample_distinct(self, count: int, population: int) -> list[int]:
        """`count` distinct integers from [0, population), in draw order."""
        if count > population:
            raise ValueError("cannot sample more values than the population")
        seen = set()
        out = []
        while len(out) < count:
            x = self.below(population)
            if x not in seen:
                seen.add(x)
                out.append(x)
        return out
