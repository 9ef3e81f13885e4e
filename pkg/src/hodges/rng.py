"""Deterministic stream-splittable random number generation.

Every stochastic routine in the package derives its generator from an integer
master seed plus a tuple of integer keys (sample size, grid index, chunk
index, ...). Distinct key tuples give statistically independent streams, so
results are reproducible bit-for-bit regardless of execution order or worker
count.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the independent substream identified by ``(seed, *keys)``."""
    if not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed)!r}")
    return np.random.default_rng([int(seed), *map(int, keys)])
