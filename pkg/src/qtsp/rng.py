"""Portable seeded generator for benchmark instances.

The generator is xoshiro256** (Blackman & Vigna), with its 256-bit state
expanded from a single 64-bit seed by SplitMix64. Both are defined on
unsigned 64-bit integer arithmetic only, so a given seed produces the same
stream on every platform and Python version.

Grid coordinates are decoded by rejection sampling: the top 9 bits of a
64-bit output give a value in 0..511, values above the requested maximum are
discarded and redrawn.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state; return ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** 1.0 with SplitMix64 seeding."""

    def __init__(self, seed: int):
        if not 0 <= seed <= MASK64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        sm = seed
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self._s = s

    @classmethod
    def from_state(cls, state) -> Xoshiro256:
        """Generator with an explicit 256-bit state (four words, not all zero)."""
        words = [int(w) for w in state]
        if len(words) != 4 or not any(words) or any(not 0 <= w <= MASK64 for w in words):
            raise ValueError("state must be four unsigned 64-bit words, not all zero")
        g = cls.__new__(cls)
        g._s = words
        return g

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def randint(self, hi: int) -> int:
        """Uniform integer in ``0..hi`` (inclusive) by top-bits rejection."""
        if hi < 0:
            raise ValueError("hi must be nonnegative")
        if hi == 0:
            return 0
        bits = hi.bit_length()
        shift = 64 - bits
        while True:
            v = self.next_u64() >> shift
            if v <= hi:
                return v
