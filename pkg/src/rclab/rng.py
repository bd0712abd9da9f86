"""Seeded random streams.

Every stochastic routine in the package draws from PCG64 generators built
from a ``SeedSequence`` whose entropy is ``(seed, *keys)``.  Sample ``i`` of a
batch therefore gets the same stream no matter how the batch is split across
workers.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "PCG64"
GENERATOR_VERSION = 1


def stream(seed: int, *keys: int) -> np.random.Generator:
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seed and stream keys must be non-negative integers")
    ss = np.random.SeedSequence([GENERATOR_VERSION, int(seed), *map(int, keys)])
    return np.random.Generator(np.random.PCG64(ss))
