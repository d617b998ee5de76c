"""Test functions for the identity checks.

Point functions (``f``, ``g``) take an ``(n, d)`` array and return ``(n,)``
values. Pattern functionals (``h`` and oracle statistics) take a
PointPattern. Linear point functions reuse ``processes.intensities.LinearIntensity``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from patterns.geometry import Region
from patterns.pattern import PointPattern
from patterns.services import count_in


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.full(len(points), float(self.value))

    def describe(self) -> str:
        return f"const {self.value:g}"


@dataclass(frozen=True)
class Indicator:
    region: Region
    value: float = 1.0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        if len(points) == 0:
            return np.zeros(0)
        return self.value * self.region.contains(points).astype(float)

    def describe(self) -> str:
        return f"indicator {self.region} x {self.value:g}"


@dataclass(frozen=True)
class TotalCount:
    def __call__(self, pattern: PointPattern) -> int:
        return len(pattern)

    def describe(self) -> str:
        return "count"


@dataclass(frozen=True)
class RegionCount:
    region: Region

    def __call__(self, pattern: PointPattern) -> int:
        return count_in(pattern, self.region)

    def describe(self) -> str:
        return f"count in {self.region}"


@dataclass(frozen=True)
class ConstantFunctional:
    value: float = 1.0

    def __call__(self, pattern: PointPattern) -> float:
        return float(self.value)

    def describe(self) -> str:
        return f"const {self.value:g}"


@dataclass(frozen=True)
class CountAtMost:
    """1{Φ(region) ≤ threshold}; the whole window when ``region`` is None."""

    threshold: int
    region: Region | None = None

    def __call__(self, pattern: PointPattern) -> float:
        n = len(pattern) if self.region is None else count_in(pattern, self.region)
        return 1.0 if n <= self.threshold else 0.0

    def describe(self) -> str:
        return f"count_at_most {self.threshold}"


def pattern_sum(fn, pattern: PointPattern) -> float:
    """Φ(fn) = Σ_{X∈Φ} fn(X)."""
    if len(pattern) == 0:
        return 0.0
    return float(np.sum(fn(pattern.points)))
