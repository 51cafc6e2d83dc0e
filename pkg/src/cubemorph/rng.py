"""Seedable, portable pseudo-random generator used by all stochastic code.

Every random decision in the engine flows through a SplitMix64 stream.
SplitMix64 needs only 64-bit integer arithmetic, which makes it trivial to
re-implement bit-for-bit inside the compiled kernel; as a result a run is
reproducible from its seed regardless of which kernel backend executed it.
The compiled twin lives in ``cubemorph._kernels._fast`` and must consume
the stream in exactly the same order as this class.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2**-53; a 53-bit mantissa drawn from the top bits gives a uniform double.
_INV_2_53 = 1.0 / 9007199254740992.0


class SplitMix64:
    """SplitMix64 stream; the state advances by the 64-bit golden ratio."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        if not isinstance(seed, int) or seed < 0 or seed > MASK64:
            raise ValueError("seed must be an integer in [0, 2**64)")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV_2_53

    def randbelow(self, n: int) -> int:
        """Unbiased uniform integer in [0, n) via rejection sampling.

        The rejection threshold is 2**64 mod n, so exactly one draw is
        consumed in the common case; n == 1 still consumes a draw, which
        keeps the stream aligned across code paths that always sample an
        index even from singleton candidate lists.
        """
        if n <= 0:
            raise ValueError("n must be positive")
        threshold = ((1 << 64) - n) % n
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % n
