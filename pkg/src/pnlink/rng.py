"""Seed plumbing.

Every random stream is a numpy ``Philox`` (4x64, 10 rounds) generator whose
128-bit key is ``(master_seed << 64) | stream_id`` and whose counter starts at
zero. Distinct keys give independent streams, so nothing depends on the order
in which streams are created or consumed. Stream ids for derived purposes are
built with :func:`mix64`, a splitmix64 chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
RNG_ALGORITHM = "numpy.random.Philox(4x64-10); key=(master_seed<<64)|stream_id; counter=0"
MIX_ALGORITHM = "splitmix64 chain: h=splitmix64(h ^ word) per word, h0=0x9E3779B97F4A7C15"


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix64(*words: int) -> int:
    """Hash a tuple of integers into one 64-bit value."""
    h = 0x9E3779B97F4A7C15
    for w in words:
        h = splitmix64(h ^ (int(w) & MASK64))
    return h


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= int(v) <= MASK64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {v}")

    def generator(self) -> np.random.Generator:
        key = (int(self.master_seed) << 64) | int(self.stream_id)
        return np.random.Generator(np.random.Philox(key=key))

    def derive(self, *words: int) -> "SeedSpec":
        """Child seed on the same master with a hashed stream id."""
        return SeedSpec(self.master_seed, mix64(self.stream_id, *words))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.generator()
    return SeedSpec(int(seed)).generator()
