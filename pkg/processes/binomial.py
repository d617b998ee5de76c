from __future__ import annotations

import numpy as np

from patterns.geometry import Point, Region, Window
from patterns.pattern import PointPattern
from patterns.quadrature import quadrature_grid

from .base import ProcessModel
from .exceptions import InvalidModel, ZeroIntensityAtPoint
from .intensities import LinearIntensity, exact_volume

DENSITY_TOLERANCE = 1e-6


class BinomialModel(ProcessModel):
    """Exactly ``n`` i.i.d. points with density ``f`` (uniform unless given).

    The Palm version at x is a Binomial(n - 1) pattern plus δ_x; the
    two-point reduced Palm version is Binomial(n - 2).
    """

    has_analytic_palm = True
    has_two_point_palm = True
    has_product_density2 = True

    def __init__(self, window: Window, n: int, density: LinearIntensity | None = None):
        super().__init__(window)
        if int(n) != n or n < 0:
            raise InvalidModel(f"Binomial point count must be a non-negative integer, got {n}")
        self.n = int(n)
        self.density = density
        if density is not None:
            low, high = density.bounds(window)
            if low < 0:
                raise InvalidModel(f"Density {density.describe()} is negative on the window")
            mass = density.integral(window, window)
            if abs(mass - 1.0) > DENSITY_TOLERANCE:
                raise InvalidModel(f"Density must integrate to 1 over the window, got {mass:g}")
            self._density_max = high

    def _draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.density is None or count == 0:
            return self.window.uniform(rng, count)
        # Rejection sampling against the uniform envelope.
        accepted: list[np.ndarray] = []
        have = 0
        while have < count:
            batch = self.window.uniform(rng, 2 * (count - have))
            keep = rng.random(len(batch)) * self._density_max < self.density(batch)
            accepted.append(batch[keep])
            have += int(keep.sum())
        return np.concatenate(accepted)[:count]

    def sample(self, rng: np.random.Generator) -> PointPattern:
        return self._pattern(self._draw(rng, self.n))

    def palm_sample(self, x: Point, rng: np.random.Generator) -> PointPattern:
        if self.n < 1:
            raise ZeroIntensityAtPoint(x, "Binomial(0) has no atoms")
        return self._with_atom(self._draw(rng, self.n - 1), x)

    def reduced_palm_sample(self, x: Point, rng: np.random.Generator) -> PointPattern:
        self.window.require(x)
        if self.n < 1:
            raise ZeroIntensityAtPoint(x, "Binomial(0) has no atoms")
        return self._pattern(self._draw(rng, self.n - 1))

    def two_point_reduced_palm_sample(self, x: Point, y: Point, rng: np.random.Generator) -> PointPattern:
        self.window.require(x)
        self.window.require(y)
        if self.n < 2:
            raise ZeroIntensityAtPoint(x, f"Binomial({self.n}) has no pair of atoms")
        return self._pattern(self._draw(rng, self.n - 2))

    def density_at(self, points: np.ndarray) -> np.ndarray:
        if self.density is None:
            return np.full(len(points), 1.0 / self.window.volume)
        return self.density(points)

    def intensity_at(self, points: np.ndarray) -> np.ndarray:
        return self.n * self.density_at(points)

    def product_density2_at(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.n * (self.n - 1) * self.density_at(xs) * self.density_at(ys)

    def _probability(self, region: Region) -> float:
        if self.density is None:
            volume = exact_volume(region, self.window)
            if volume is not None:
                return volume / self.window.volume
        else:
            closed = self.density.integral(region, self.window)
            if closed is not None:
                return closed
        grid = quadrature_grid(region)
        nodes = grid.nodes[self.window.contains(grid.nodes)]
        return grid.integrate(self.density_at(nodes))

    def mean_count(self, region: Region) -> float:
        return self.n * self._probability(region)

    def second_factorial_moment(self, region: Region) -> float:
        return self.n * (self.n - 1) * self._probability(region) ** 2

    def describe(self) -> str:
        if self.density is None:
            return f"Binomial(n={self.n})"
        return f"Binomial(n={self.n}, {self.density.describe()})"
