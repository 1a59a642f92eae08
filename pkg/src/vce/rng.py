"""Seed derivation for reproducible, order-independent randomness.

Every random stream is a Philox (counter-based) generator keyed by a
``SeedSequence`` built from a master seed and a path of integers, so a
stream depends only on *where* it is used, never on execution order.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def _entropy(seed: int, path: tuple[int, ...]) -> list[int]:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return [int(seed) & MASK64, *(int(p) & MASK64 for p in path)]


def generator(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for ``(seed, *path)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_entropy(seed, path))))


def derive_seed(seed: int, *path: int) -> int:
    """64-bit child seed for ``(seed, *path)``."""
    lo, hi = np.random.SeedSequence(_entropy(seed, path)).generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def blocks(total: int, block: int) -> list[tuple[int, int]]:
    """Fixed ``(start, size)`` partition of ``total`` items, independent of worker count."""
    return [(s, min(block, total - s)) for s in range(0, total, block)]
