"""Seed derivation and fast uniform draws on a ``random.Random`` stream.

``below`` maps one 53-bit ``random()`` double to ``[0, n)``; the bias is
below 2**-40 for the n used here (at most a few thousand), far under
anything a Monte Carlo run can resolve, and it is twice as fast as
``randrange``.
"""

from __future__ import annotations

import random

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 finaliser (Steele, Lea & Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, trial: int, point: int = 0) -> int:
    """Per-trial seed; independent of how trials are split across workers."""
    h = splitmix64(master & MASK64)
    h = splitmix64(h ^ (point & MASK64))
    return splitmix64(h ^ (trial & MASK64))


def trial_rng(master: int, trial: int, point: int = 0) -> random.Random:
    return random.Random(derive_seed(master, trial, point))


def below(rng, n: int) -> int:
    return int(rng.random() * n)


def shuffle(rng, xs: list) -> list:
    """In-place Fisher-Yates shuffle."""
    rand = rng.random
    for i in range(len(xs) - 1, 0, -1):
        j = int(rand() * (i + 1))
        xs[i], xs[j] = xs[j], xs[i]
    return xs


def sample_distinct(rng, population: int, count: int) -> list:
    """``count`` distinct integers from ``range(population)`` in draw order."""
    if count > population:
        raise ValueError("sample larger than population")
    rand = rng.random
    seen = set()
    out = []
    while len(out) < count:
        x = int(rand() * population)
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out
