"""Seeded random streams.

Every chain draws from its own ``numpy.random.Generator`` backed by PCG64DXSM.
Streams are derived from a root seed with ``SeedSequence`` spawn keys, so
replicate ``r`` at grid point ``g`` always receives the stream keyed
``(g, r)`` regardless of scheduling order, and distinct keys give
statistically independent streams.
"""
import numbers

import numpy as np

from .errors import DomainError

RNG_ALGORITHM = "numpy PCG64DXSM seeded through SeedSequence(entropy=seed, spawn_key=key)"

MAX_SEED = 2**64 - 1


def check_seed(seed) -> int:
    """Return ``seed`` as an int after checking it is an unsigned 64-bit integer."""
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise DomainError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the sub-stream ``key`` of root ``seed``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64DXSM(ss))


def describe(seed: int, *key: int) -> dict:
    return {"algorithm": RNG_ALGORITHM, "seed": int(seed), "spawn_key": [int(k) for k in key]}
