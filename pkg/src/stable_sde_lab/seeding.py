"""Deterministic seed derivation for replicate-parallel Monte Carlo.

Each (master seed, replicate index, stream tag) triple maps to an
independent 64-bit seed through a splitmix64 avalanche chain.  The mixing is
fixed for all time: changing it silently would break byte-level
reproducibility of every experiment.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["splitmix64", "derive_seed", "replicate_rng"]

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step: full-avalanche mix of a 64-bit word."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


@lru_cache(maxsize=256)
def _fold_tag(tag: str) -> int:
    h = 0x8B1A9953C4611296
    for byte in tag.encode("utf-8"):
        h = splitmix64(h ^ byte)
    return h


def derive_seed(master: int, replicate: int, tag: str = "") -> int:
    """Collision-resistant 64-bit seed for one replicate of one stream.

    Distinct tags give mutually independent streams, so resampling one stage
    (for example, growing the replicate count) never disturbs another.
    """
    h = splitmix64(master & _MASK)
    h = splitmix64(h ^ splitmix64(replicate & _MASK))
    h = splitmix64(h ^ _fold_tag(tag))
    return h


def replicate_rng(master: int, replicate: int, tag: str = "") -> np.random.Generator:
    """Fresh PCG64 generator for the derived seed."""
    return np.random.default_rng(derive_seed(master, replicate, tag))
