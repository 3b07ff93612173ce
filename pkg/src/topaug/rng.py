"""Portable seeded random streams.

SplitMix64 (Steele, Lea & Flood 2014) is used instead of ``random.Random`` so
that every draw is defined bit-for-bit and can be replayed by any other
implementation:

* state advances by ``0x9E3779B97F4A7C15`` (mod 2**64) and is mixed by the
  standard SplitMix64 finalizer;
* ``random()`` takes the top 53 bits of a draw and scales by ``2**-53``;
* ``below(n)`` is rejection sampling on the full 64-bit draw, rejecting
  draws ``>= 2**64 - (2**64 % n)``.

Per-key streams (one per template) are seeded with the first 8 bytes
(big-endian) of ``sha256(f"{seed}:{key}")``.
"""
from __future__ import annotations

import hashlib
from typing import Sequence, TypeVar

T = TypeVar("T")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(seed: int, key: str) -> int:
    digest = hashlib.sha256(f"{seed}:{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK64

    @classmethod
    def for_key(cls, seed: int, key: str) -> "SplitMix64":
        return cls(derive_seed(seed, key))

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def choice(self, seq: Sequence[T]) -> T:
        return seq[self.below(len(seq))]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """``k`` distinct indices from ``range(n)`` by partial Fisher-Yates, sorted."""
        pool = list(range(n))
        for i in range(min(k, n)):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])
