"""Counter-based RNG streams: trial ``i`` of stream ``prefix`` under master
seed ``seed`` always sees the same generator, whatever runs in parallel."""

from __future__ import annotations

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError("seed must be an integer")
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return int(seed)


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key)))
