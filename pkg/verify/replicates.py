"""Replicate fan-out over derived RNG streams.

Replicates are cut into fixed-size blocks; block ``b`` always draws from
``rng_state.spawn(b)``. Thread count only decides who runs a block, and
results are returned in block order, so every reduction downstream sees the
same values in the same order for any ``threads``.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np
from django.conf import settings

from patterns.rng import RngState

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def configured_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = getattr(settings, "PALM_THREADS", 1)
    return max(1, int(threads))


def block_sizes(n_reps: int, block: int | None = None) -> list[int]:
    if n_reps < 1:
        raise ValueError(f"Replicate count must be >= 1, got {n_reps}")
    block = int(block or getattr(settings, "PALM_REPLICATE_BLOCK", 512))
    full, rest = divmod(n_reps, block)
    return [block] * full + ([rest] if rest else [])


def map_streams(
    rng_state: RngState,
    tasks: Sequence[T],
    fn: Callable[[T, np.random.Generator], R],
    threads: int | None = None,
) -> list[R]:
    """Run ``fn(task_i, generator_i)`` with generator_i from ``rng_state.spawn(i)``."""
    threads = configured_threads(threads)

    def run(indexed: tuple[int, T]) -> R:
        i, task = indexed
        return fn(task, rng_state.spawn(i).generator())

    indexed = list(enumerate(tasks))
    if threads == 1 or len(indexed) <= 1:
        return [run(item) for item in indexed]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, indexed))


def run_replicates(
    n_reps: int,
    rng_state: RngState,
    fn: Callable[[int, np.random.Generator], R],
    threads: int | None = None,
) -> list[R]:
    """Run ``fn(block_size, generator)`` over the replicate blocks, in block order."""
    sizes = block_sizes(n_reps)
    logger.debug("Replicates scheduled | reps=%s blocks=%s threads=%s", n_reps, len(sizes), configured_threads(threads))
    return map_streams(rng_state, sizes, fn, threads)


def collect_values(
    n_reps: int,
    rng_state: RngState,
    draw: Callable[[np.random.Generator], float],
    threads: int | None = None,
) -> np.ndarray:
    """One float per replicate, ``draw`` called once per replicate."""

    def block(size: int, rng: np.random.Generator) -> np.ndarray:
        return np.fromiter((draw(rng) for _ in range(size)), dtype=float, count=size)

    return np.concatenate(run_replicates(n_reps, rng_state, block, threads))


def mean_and_se(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    mean = float(np.mean(values))
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / np.sqrt(n))
