"""Pinned deterministic RNG for reproducible benchmark initial points.

A splitmix64 state drives the uniform stream; standard normals come out
of the Box-Muller transform. The construction is fixed so that a seed
identifies the exact draw sequence, independent of platform or numpy
version:

    state <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z <- state;  z <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  mod 2^64
                 z <- (z ^ (z >> 27)) * 0x94D049BB133111EB  mod 2^64
                 z <- z ^ (z >> 31)
    uniform (0, 1]: ((z >> 11) + 1) * 2^-53
    normals: r = sqrt(-2 ln u1), a = 2 pi u2 -> (r cos a, r sin a)

The second normal of each Box-Muller pair is cached and returned next.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """64-bit state uniform generator."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def next_unit(self) -> float:
        """Uniform double in (0, 1]."""
        return ((self.next_u64() >> 11) + 1) * 2.0**-53


class NormalStream:
    """Standard normal draws: splitmix64 uniforms through Box-Muller."""

    def __init__(self, seed: int):
        self._bits = SplitMix64(seed)
        self._spare: float | None = None

    def normal(self) -> float:
        if self._spare is not None:
            value, self._spare = self._spare, None
            return value
        u1 = self._bits.next_unit()
        u2 = self._bits.next_unit()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare = radius * math.sin(angle)
        return radius * math.cos(angle)

    def standard_normal(self, count: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(count)])
