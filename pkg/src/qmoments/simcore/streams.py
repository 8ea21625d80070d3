"""Order-independent random streams for shot execution.

Shots are grouped into fixed-size blocks. Block ``b`` of a run seeded with
``seed`` draws from ``default_rng(SeedSequence(seed, spawn_key=(*key, b)))``,
so the records of shot ``i`` depend only on ``(seed, key, i)`` and never on
how many workers processed the blocks or in which order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def block_rng(seed: int, block: int, key: Sequence[int] = ()) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(*map(int, key), int(block))))


def shot_blocks(shots: int, block_size: int) -> list[tuple[int, int]]:
    """Half-open ``(start, stop)`` shot ranges covering ``range(shots)``."""
    if shots < 0:
        raise ValueError("shots must be nonnegative")
    return [(s, min(s + block_size, shots)) for s in range(0, shots, block_size)]


def parallel_map(fn: Callable[..., T], items: Sequence, threads: int = 1) -> list[T]:
    """Ordered map; ``threads`` only changes wall-clock, never the result."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def derive_seed(seed: int, *key: int) -> int:
    """A 63-bit child seed for keyed sub-experiments (runs, trials, ...)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    lo, hi = (int(w) for w in ss.generate_state(2, dtype=np.uint32))
    return (lo | (hi << 32)) & (2**63 - 1)
