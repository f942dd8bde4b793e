"""Seeding: one root seed, one independent stream per replication.

The replication seed is ``splitmix64(root ^ (GOLDEN * (index + 1)))`` (all
arithmetic mod 2**64); it drives a counter-based Philox generator. The
mapping depends only on ``(root, index)``, so results do not depend on how
replications are spread over workers.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replication_seed(root: int, index: int, stream: int = 0) -> int:
    """64-bit seed of replication ``index`` (``stream`` separates experiment families)."""
    x = (root & MASK64) ^ ((GOLDEN * (index + 1)) & MASK64)
    if stream:
        x = splitmix64(x ^ ((stream * 0xD1B54A32D192ED03) & MASK64))
    return splitmix64(x)


def make_rng(seed: int | None) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))
