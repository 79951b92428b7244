"""Seeded random streams.

All randomness goes through numpy's Philox generator, a counter-based bit
generator, so a stream is a pure function of its key and draws reproduce
exactly on every platform. Gaussian variates use numpy's ziggurat sampler
on top of that stream.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed, *counters: int) -> np.random.Generator:
    """Generator keyed by ``seed`` and an optional tuple of integer counters.

    Distinct counter tuples give statistically independent streams, which is
    how per-cell and per-purpose seeds are derived from one master seed.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(entropy=0 if seed is None else int(seed), spawn_key=tuple(counters))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *counters: int) -> int:
    """Integer seed for the stream ``(seed, *counters)``; stable across runs."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(counters))
    return int(ss.generate_state(1, dtype=np.uint32)[0])
