from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from patterns.exceptions import InvalidGeometry
from patterns.geometry import Point, Region, Window
from patterns.pattern import PointPattern
from patterns.quadrature import quadrature_grid
from patterns.services import remove_atom

from .exceptions import NoAnalyticPalm, NoProductDensity, ZeroIntensityAtPoint

# Pairs of nodes for double integrals grow quadratically; keep the grid coarse.
PAIR_QUADRATURE_NODES_PER_AXIS = 32


class ProcessModel(ABC):
    """A simulable point process on a window.

    Subclasses provide ``sample`` and the vectorised ``intensity_at``; the
    Palm and product-density capabilities are opt-in and advertised by the
    ``has_*`` flags. Models are immutable and safe to share across threads:
    every draw takes an explicit ``numpy.random.Generator``.
    """

    has_analytic_palm: bool = False
    has_two_point_palm: bool = False
    has_product_density2: bool = False

    def __init__(self, window: Window):
        self.window = window

    # -- sampling ---------------------------------------------------------

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> PointPattern: ...

    def palm_sample(self, x: Point, rng: np.random.Generator) -> PointPattern:
        raise NoAnalyticPalm(self)

    def reduced_palm_sample(self, x: Point, rng: np.random.Generator) -> PointPattern:
        return remove_atom(self.palm_sample(x, rng), x)

    def two_point_reduced_palm_sample(self, x: Point, y: Point, rng: np.random.Generator) -> PointPattern:
        raise NoAnalyticPalm(self, "two-point reduced Palm sampler")

    # -- first order ------------------------------------------------------

    @abstractmethod
    def intensity_at(self, points: np.ndarray) -> np.ndarray:
        """Intensity density m at each row of ``points`` (no window check)."""

    def intensity(self, x: Point) -> float:
        self.window.require(x)
        return float(self.intensity_at(x.as_array()[None, :])[0])

    def mean_count(self, region: Region) -> float:
        """M_Φ(B) = ∫_{B ∩ W} m; quadrature unless a subclass knows better."""
        grid = quadrature_grid(region)
        nodes = grid.nodes[self.window.contains(grid.nodes)]
        return grid.integrate(self.intensity_at(nodes))

    # -- second order -----------------------------------------------------

    def product_density2_at(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        raise NoProductDensity(self)

    def product_density2(self, x: Point, y: Point) -> float:
        if not self.has_product_density2:
            raise NoProductDensity(self)
        self.window.require(x)
        self.window.require(y)
        if x == y:
            raise InvalidGeometry("Second product density is defined off the diagonal only")
        return float(self.product_density2_at(x.as_array()[None, :], y.as_array()[None, :])[0])

    def reduced_palm_intensity(self, x: Point, y: Point) -> float:
        """Intensity at y of the reduced Palm version at x: ρ^(2)(x, y) / m(x)."""
        m = self.intensity(x)
        if m <= 0:
            raise ZeroIntensityAtPoint(x)
        return self.product_density2(x, y) / m

    def second_factorial_moment(self, region: Region) -> float:
        """M_{Φ^(2)}(B × B) by product midpoint quadrature."""
        if not self.has_product_density2:
            raise NoProductDensity(self)
        grid = quadrature_grid(region, nodes_per_axis=PAIR_QUADRATURE_NODES_PER_AXIS)
        nodes = grid.nodes[self.window.contains(grid.nodes)]
        n = len(nodes)
        if n == 0:
            return 0.0
        xs = np.repeat(nodes, n, axis=0)
        ys = np.tile(nodes, (n, 1))
        return float(grid.cell_volume ** 2 * np.sum(self.product_density2_at(xs, ys)))

    # -- misc -------------------------------------------------------------

    def _pattern(self, points: np.ndarray) -> PointPattern:
        return PointPattern(points, self.window, validate=False)

    def _with_atom(self, points: np.ndarray, x: Point) -> PointPattern:
        self.window.require(x)
        return self._pattern(np.concatenate([points, x.as_array()[None, :]]))

    def describe(self) -> str:
        return type(self).__name__

    def __repr__(self) -> str:  # pragma: no cover
        return f"<{self.describe()}>"
