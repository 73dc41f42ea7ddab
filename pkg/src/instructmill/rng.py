"""Deterministic randomness for every stage that needs any.

All draws come from splitmix64 streams keyed by (seed, *string parts), e.g.
(seed, dataset id, stage tag) or (seed, dataset id, stage tag, record
ordinal). Keyed streams keep draws local: adding one dataset never perturbs
another dataset's shuffle, and stages never share a sequence.
"""

from __future__ import annotations

from typing import Sequence

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_PART_SEP = 0x1F


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_key(seed: int, *parts: object) -> int:
    """Fold a seed plus arbitrary key parts into one 64-bit stream key.

    FNV-1a over the UTF-8 of each part, with a separator fold between parts
    so ("ab", "c") and ("a", "bc") key differently. Stable across runs and
    platforms, unlike the builtin hash().
    """
    h = _FNV_OFFSET
    for byte in (seed & MASK64).to_bytes(8, "big"):
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    for part in parts:
        for byte in str(part).encode("utf-8"):
            h = ((h ^ byte) * _FNV_PRIME) & MASK64
        h = ((h ^ _PART_SEP) * _FNV_PRIME) & MASK64
    return h


class SplitMix64:
    """The splitmix64 sequence with uniform bounded draws and Fisher-Yates."""

    def __init__(self, key: int):
        self._state = key & MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        return _mix(self._state)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n); rejection sampling, no modulo bias."""
        if n <= 0:
            raise ValueError("randrange bound must be positive")
        threshold = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_uint64()
            if v < threshold:
                return v % n

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def shuffled(self, items: Sequence) -> list:
        out = list(items)
        self.shuffle(out)
        return out


def stream(seed: int, *parts: object) -> SplitMix64:
    """A fresh generator keyed by (seed, *parts)."""
    return SplitMix64(derive_key(seed, *parts))
