"""Seed handling shared by every stochastic routine.

All randomness flows through :class:`numpy.random.Generator` objects backed by
PCG64. A generator object can be handed straight into the numba kernels, which
advance its state in place, so Python-side and kernel-side draws come from one
stream.
"""

from __future__ import annotations

import numpy as np

SeedLike = int | np.random.Generator | np.random.SeedSequence


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Return a PCG64 generator for ``seed`` (generators pass through untouched)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if seed is None or int(seed) < 0:
        raise ValueError("an explicit non-negative integer seed is required")
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(master: int, *keys: int) -> int:
    """Stable 64-bit child seed for ``(master, *keys)``.

    The value depends only on the tuple of integers, so adding replicas or
    sweep points never shifts the seeds of existing ones.
    """
    ss = np.random.SeedSequence([int(master), *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def split(seed: int, n: int) -> list[np.random.Generator]:
    """``n`` independent generators spawned from one integer seed."""
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]
