from __future__ import annotations

import logging
from typing import Union

import numpy as np

from patterns.geometry import Point, Region, Window
from patterns.pattern import PointPattern

from .base import ProcessModel
from .exceptions import InvalidModel
from .intensities import LinearIntensity, exact_volume

logger = logging.getLogger(__name__)

Rate = Union[float, LinearIntensity]

# Relative slack when checking λ(x) <= λ_max on proposed points.
BOUND_SLACK = 1e-12


class PoissonModel(ProcessModel):
    """Poisson process, homogeneous (constant rate) or inhomogeneous by thinning.

    Palm versions follow Slivnyak–Mecke: Φ_x = Φ + δ_x, and the reduced Palm
    version at any number of points is Φ itself.
    """

    has_analytic_palm = True
    has_two_point_palm = True
    has_product_density2 = True

    def __init__(self, window: Window, rate: Rate, rate_max: float | None = None):
        super().__init__(window)
        if isinstance(rate, LinearIntensity):
            if rate_max is None:
                rate_max = rate.bounds(window)[1]
            low, _ = rate.bounds(window)
            if low < 0:
                raise InvalidModel(f"Intensity {rate.describe()} is negative on the window")
            if rate_max < 0:
                raise InvalidModel(f"rate_max must be non-negative, got {rate_max}")
            self.rate_fn: LinearIntensity | None = rate
            self.rate = None
            self.rate_max = float(rate_max)
        else:
            rate = float(rate)
            if not np.isfinite(rate) or rate < 0:
                raise InvalidModel(f"Poisson rate must be finite and non-negative, got {rate}")
            self.rate_fn = None
            self.rate = rate
            self.rate_max = rate

    @property
    def homogeneous(self) -> bool:
        return self.rate_fn is None

    def sample_points(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        """Raw ``(n, d)`` draw; ``scale`` multiplies the intensity (mixed Poisson)."""
        n = rng.poisson(scale * self.rate_max * self.window.volume)
        proposal = self.window.uniform(rng, n)
        if self.homogeneous or n == 0:
            return proposal
        lam = self.rate_fn(proposal)
        if np.any(lam > self.rate_max * (1.0 + BOUND_SLACK)):
            worst = float(lam.max())
            logger.error("Thinning bound violated | model=%s lambda=%s rate_max=%s", self.describe(), worst, self.rate_max)
            raise InvalidModel(f"λ(x) = {worst:g} exceeds rate_max = {self.rate_max:g}")
        keep = rng.random(n) * self.rate_max < lam
        return proposal[keep]

    def sample(self, rng: np.random.Generator) -> PointPattern:
        return self._pattern(self.sample_points(rng))

    def palm_sample(self, x: Point, rng: np.random.Generator) -> PointPattern:
        return self._with_atom(self.sample_points(rng), x)

    def reduced_palm_sample(self, x: Point, rng: np.random.Generator) -> PointPattern:
        self.window.require(x)
        return self.sample(rng)

    def two_point_reduced_palm_sample(self, x: Point, y: Point, rng: np.random.Generator) -> PointPattern:
        self.window.require(x)
        self.window.require(y)
        return self.sample(rng)

    def intensity_at(self, points: np.ndarray) -> np.ndarray:
        if self.homogeneous:
            return np.full(len(points), self.rate)
        return self.rate_fn(points)

    def product_density2_at(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.intensity_at(xs) * self.intensity_at(ys)

    def mean_count(self, region: Region) -> float:
        if self.homogeneous:
            volume = exact_volume(region, self.window)
            if volume is not None:
                return self.rate * volume
        else:
            closed = self.rate_fn.integral(region, self.window)
            if closed is not None:
                return closed
        return super().mean_count(region)

    def second_factorial_moment(self, region: Region) -> float:
        # ρ^(2)(x, y) = λ(x)λ(y) factorises.
        return self.mean_count(region) ** 2

    def describe(self) -> str:
        if self.homogeneous:
            return f"Poisson(rate={self.rate:g})"
        return f"Poisson({self.rate_fn.describe()}, rate_max={self.rate_max:g})"
