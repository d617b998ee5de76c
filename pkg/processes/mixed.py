from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from patterns.geometry import Point, Region
from patterns.pattern import PointPattern
from patterns.rng import pick_branch

from .base import ProcessModel
from .exceptions import InvalidModel, ZeroIntensityAtPoint
from .poisson import PoissonModel

PROBABILITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MixingLaw:
    """Finite discrete law of the random intensity multiplier Λ."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        if not values or len(values) != len(probs):
            raise InvalidModel("Mixing law needs matching, non-empty values and probabilities")
        if any(v < 0 or not np.isfinite(v) for v in values):
            raise InvalidModel(f"Mixing values must be finite and non-negative, got {values}")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > PROBABILITY_TOLERANCE:
            raise InvalidModel(f"Mixing probabilities must be non-negative and sum to 1, got {probs}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    def moment(self, power: int) -> float:
        return float(sum(p * v**power for v, p in zip(self.values, self.probs)))

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def second_moment(self) -> float:
        return self.moment(2)

    def tilted(self, power: int) -> "MixingLaw":
        """The law reweighted by Λ^power (power 1 is the size-biased law)."""
        norm = self.moment(power)
        if norm <= 0:
            raise ZeroIntensityAtPoint("any point", f"E[Λ^{power}] = 0")
        return MixingLaw(self.values, tuple(p * v**power / norm for v, p in zip(self.values, self.probs)))

    def draw(self, rng: np.random.Generator) -> float:
        return self.values[pick_branch(np.asarray(self.probs), rng)]

    def describe(self) -> str:
        return " ".join(f"{v:g}:{p:g}" for v, p in zip(self.values, self.probs))


class MixedPoissonModel(ProcessModel):
    """Poisson process with intensity Λ·λ(x), Λ drawn once per realization.

    Under Palm conditioning at one point Λ follows the size-biased law; at two
    points the Λ²-tilted law.
    """

    has_analytic_palm = True
    has_two_point_palm = True
    has_product_density2 = True

    def __init__(self, base: PoissonModel, mixing: MixingLaw):
        super().__init__(base.window)
        self.base = base
        self.mixing = mixing
        self._size_biased = mixing.tilted(1) if mixing.mean > 0 else None
        self._square_tilted = mixing.tilted(2) if mixing.second_moment > 0 else None

    def _draw_with(self, law: MixingLaw | None, x: Point, rng: np.random.Generator) -> np.ndarray:
        if law is None:
            raise ZeroIntensityAtPoint(x, "mixing law is a point mass at zero")
        return self.base.sample_points(rng, scale=law.draw(rng))

    def sample(self, rng: np.random.Generator) -> PointPattern:
        return self._pattern(self.base.sample_points(rng, scale=self.mixing.draw(rng)))

    def palm_sample(self, x: Point, rng: np.random.Generator) -> PointPattern:
        self.window.require(x)
        return self._with_atom(self._draw_with(self._size_biased, x, rng), x)

    def reduced_palm_sample(self, x: Point, rng: np.random.Generator) -> PointPattern:
        self.window.require(x)
        return self._pattern(self._draw_with(self._size_biased, x, rng))

    def two_point_reduced_palm_sample(self, x: Point, y: Point, rng: np.random.Generator) -> PointPattern:
        self.window.require(x)
        self.window.require(y)
        return self._pattern(self._draw_with(self._square_tilted, x, rng))

    def intensity_at(self, points: np.ndarray) -> np.ndarray:
        return self.mixing.mean * self.base.intensity_at(points)

    def product_density2_at(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.mixing.second_moment * self.base.intensity_at(xs) * self.base.intensity_at(ys)

    def mean_count(self, region: Region) -> float:
        return self.mixing.mean * self.base.mean_count(region)

    def second_factorial_moment(self, region: Region) -> float:
        return self.mixing.second_moment * self.base.mean_count(region) ** 2

    def describe(self) -> str:
        return f"MixedPoisson({self.base.describe()}, mixing={self.mixing.describe()})"
