from __future__ import annotations

from typing import Sequence

import numpy as np

from patterns.geometry import Point, Region
from patterns.pattern import PointPattern
from patterns.services import superpose_all
from processes.base import ProcessModel
from processes.exceptions import InvalidModel, NoAnalyticPalm, NoProductDensity

from . import samplers
from .weights import MixtureWeights, TwoPointWeights, mixture_weights, two_point_weights


class SuperposedModel(ProcessModel):
    """Φ = Φ₁ + … + Φ_k for independent components on one window.

    Itself a ProcessModel, so superpositions nest. Palm sampling is available
    when every component has an analytic Palm sampler, and follows the mixture
    representation; the two-point reduced Palm sampler needs k = 2.
    """

    def __init__(self, components: Sequence[ProcessModel]):
        components = tuple(components)
        if len(components) < 2:
            raise InvalidModel(f"A superposition needs at least two components, got {len(components)}")
        window = components[0].window
        if any(c.window != window for c in components[1:]):
            raise InvalidModel("Superposed components must share one window")
        super().__init__(window)
        self.components = components
        self.has_analytic_palm = all(c.has_analytic_palm for c in components)
        self.has_product_density2 = all(c.has_product_density2 for c in components)
        self.has_two_point_palm = len(components) == 2 and all(
            c.has_two_point_palm and c.has_product_density2 for c in components
        )

    def flatten(self) -> "SuperposedModel":
        leaves: list[ProcessModel] = []
        for c in self.components:
            leaves.extend(c.flatten().components if isinstance(c, SuperposedModel) else [c])
        return SuperposedModel(leaves)

    def sample(self, rng: np.random.Generator) -> PointPattern:
        return superpose_all([c.sample(rng) for c in self.components])

    def mixture_weights(self, x: Point) -> MixtureWeights:
        return mixture_weights(self.components, x)

    def two_point_weights(self, x: Point, y: Point) -> TwoPointWeights:
        return two_point_weights(self, x, y)

    def palm_sample(self, x: Point, rng: np.random.Generator) -> PointPattern:
        return samplers.palm_sample_superposition(self, x, rng)

    def reduced_palm_sample(self, x: Point, rng: np.random.Generator) -> PointPattern:
        return samplers.reduced_palm_sample_superposition(self, x, rng)

    def two_point_reduced_palm_sample(self, x: Point, y: Point, rng: np.random.Generator) -> PointPattern:
        if not self.has_two_point_palm:
            raise NoAnalyticPalm(self, "two-point reduced Palm sampler")
        return samplers.two_point_reduced_palm_sample(self, x, y, rng)

    def intensity_at(self, points: np.ndarray) -> np.ndarray:
        return np.sum([c.intensity_at(points) for c in self.components], axis=0)

    def product_density2_at(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        if not self.has_product_density2:
            raise NoProductDensity(self)
        m_x = [c.intensity_at(xs) for c in self.components]
        m_y = [c.intensity_at(ys) for c in self.components]
        total = np.sum([c.product_density2_at(xs, ys) for c in self.components], axis=0)
        for j in range(len(self.components)):
            for ell in range(len(self.components)):
                if j != ell:
                    total = total + m_x[j] * m_y[ell]
        return total

    def mean_count(self, region: Region) -> float:
        return float(sum(c.mean_count(region) for c in self.components))

    def second_factorial_moment(self, region: Region) -> float:
        if not self.has_product_density2:
            raise NoProductDensity(self)
        means = [c.mean_count(region) for c in self.components]
        cross = sum(means) ** 2 - sum(m * m for m in means)
        return float(sum(c.second_factorial_moment(region) for c in self.components) + cross)

    def describe(self) -> str:
        return " + ".join(c.describe() for c in self.components)
