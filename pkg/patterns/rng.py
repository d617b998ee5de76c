"""Deterministic random streams.

A run is driven by one 64-bit master seed. Independent streams are addressed
by a key path below it: ``RngState(seed).spawn(experiment).spawn(block)``.
The key path is mixed into the seed by numpy's ``SeedSequence`` hash (the same
derivation ``SeedSequence.spawn`` uses), so distinct paths give statistically
independent PCG64 generators and the same path always gives the same stream.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidGeometry

MAX_SEED = 2**64 - 1


@dataclass(slots=True, frozen=True)
class RngState:
    seed: int
    key: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise InvalidGeometry(f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        if any(k < 0 for k in self.key):
            raise InvalidGeometry(f"Stream keys must be non-negative, got {self.key}")

    def spawn(self, *key: int) -> "RngState":
        return RngState(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=int(self.seed), spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(sequence))


def pick_branch(weights: np.ndarray, rng: np.random.Generator) -> int:
    """Draw a branch index from ``weights`` with exactly one uniform.

    Zero-weight branches are never returned, even when rounding leaves the
    cumulative sum slightly below one.
    """
    cumulative = np.cumsum(weights)
    u = rng.random() * cumulative[-1]
    idx = int(np.searchsorted(cumulative, u, side="right"))
    if idx >= len(weights):
        idx = int(np.flatnonzero(weights > 0)[-1])
    return idx
