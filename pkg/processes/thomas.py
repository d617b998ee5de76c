from __future__ import annotations

import numpy as np
from django.conf import settings

from patterns.geometry import Region, Window
from patterns.pattern import PointPattern

from .base import ProcessModel
from .exceptions import InvalidModel
from .intensities import exact_volume


class ThomasClusterModel(ProcessModel):
    """Thomas cluster process.

    Poisson(κ) parents on the window dilated by ``dilation * σ``, a Poisson(μ)
    number of offspring per parent displaced by isotropic N(0, σ²) noise, and
    only offspring inside the window kept. No analytic Palm sampler and no
    product density are exposed.
    """

    def __init__(self, window: Window, kappa: float, mu: float, sigma: float, dilation: float | None = None):
        super().__init__(window)
        for name, value in (("kappa", kappa), ("mu", mu), ("sigma", sigma)):
            if not (np.isfinite(value) and value > 0):
                raise InvalidModel(f"Thomas {name} must be positive, got {value}")
        self.kappa = float(kappa)
        self.mu = float(mu)
        self.sigma = float(sigma)
        self.dilation = float(dilation if dilation is not None else getattr(settings, "PALM_THOMAS_DILATION", 4.0))
        self.parent_window = window.dilated(self.dilation * self.sigma)

    def sample(self, rng: np.random.Generator) -> PointPattern:
        n_parents = rng.poisson(self.kappa * self.parent_window.volume)
        parents = self.parent_window.uniform(rng, n_parents)
        sizes = rng.poisson(self.mu, n_parents)
        offspring = np.repeat(parents, sizes, axis=0)
        offspring = offspring + rng.normal(0.0, self.sigma, offspring.shape)
        return self._pattern(offspring[self.window.contains(offspring)])

    def intensity_at(self, points: np.ndarray) -> np.ndarray:
        return np.full(len(points), self.kappa * self.mu)

    def mean_count(self, region: Region) -> float:
        volume = exact_volume(region, self.window)
        if volume is not None:
            return self.kappa * self.mu * volume
        return super().mean_count(region)

    def describe(self) -> str:
        return f"Thomas(kappa={self.kappa:g}, mu={self.mu:g}, sigma={self.sigma:g}, dilation={self.dilation:g})"
