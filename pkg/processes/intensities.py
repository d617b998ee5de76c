"""Intensity and density functions that models accept in place of a constant.

Callables take an ``(n, d)`` array and return ``(n,)`` values. ``integral``
returns a closed form when one exists, ``None`` otherwise (callers fall back
to quadrature).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from patterns.geometry import Ball, Box, Region, Window


@dataclass(frozen=True)
class LinearIntensity:
    """λ(x) = intercept + slope · x."""

    intercept: float
    slope: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "slope", tuple(float(s) for s in self.slope))

    def _slope_for(self, dim: int) -> np.ndarray:
        slope = np.zeros(dim)
        slope[: len(self.slope)] = self.slope[:dim]
        return slope

    def __call__(self, points: np.ndarray) -> np.ndarray:
        if len(points) == 0:
            return np.zeros(0)
        return self.intercept + points @ self._slope_for(points.shape[1])

    def at(self, center: np.ndarray) -> float:
        return float(self.intercept + center @ self._slope_for(center.shape[0]))

    def bounds(self, box: Box) -> tuple[float, float]:
        slope = self._slope_for(box.dim)
        lo_terms = np.minimum(slope * box.lower.as_array(), slope * box.upper.as_array())
        hi_terms = np.maximum(slope * box.lower.as_array(), slope * box.upper.as_array())
        return float(self.intercept + lo_terms.sum()), float(self.intercept + hi_terms.sum())

    def integral(self, region: Region, window: Window) -> float | None:
        # Linear functions integrate to value-at-centroid times volume on symmetric sets.
        if isinstance(region, Box):
            clipped = region.intersect(window)
            if clipped is None:
                return 0.0
            return self.at(clipped.midpoint.as_array()) * clipped.volume
        if isinstance(region, Ball) and window.encloses(region):
            return self.at(region.center.as_array()) * region.volume
        return None

    def describe(self) -> str:
        return "linear " + " ".join(f"{v:g}" for v in (self.intercept, *self.slope))


def exact_volume(region: Region, window: Window) -> float | None:
    """Lebesgue measure of region ∩ window when it has a closed form."""
    if isinstance(region, Box):
        clipped = region.intersect(window)
        return 0.0 if clipped is None else clipped.volume
    if window.encloses(region):
        return region.volume
    return None
