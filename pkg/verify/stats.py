"""Count distributions and two-sample comparisons."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy import stats

from .exceptions import EmptyInput

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-9


def _tail_mass(tail_mass: float | None) -> float:
    return float(tail_mass if tail_mass is not None else getattr(settings, "PALM_PMF_TAIL_MASS", 1e-9))


@dataclass(frozen=True, eq=False)
class CountPmf:
    """Distribution of a nonnegative integer statistic; ``probabilities[k] = P(count = k)``."""

    probabilities: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise EmptyInput("A count pmf needs at least one bucket")
        if np.any(p < 0):
            raise ValueError("Count pmf has negative mass")
        if abs(p.sum() - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"Count pmf must sum to 1, got {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def point_mass(cls, k: int) -> "CountPmf":
        p = np.zeros(k + 1)
        p[k] = 1.0
        return cls(p)

    @classmethod
    def from_counts(cls, values: np.ndarray, weights: np.ndarray | None = None) -> "CountPmf":
        values = np.asarray(values)
        if values.size == 0:
            raise EmptyInput("Cannot build a pmf from an empty sample")
        if np.any(values < 0):
            raise ValueError("Count statistics must be nonnegative")
        hist = np.bincount(values.astype(np.int64), weights=None if weights is None else np.asarray(weights, dtype=float))
        total = hist.sum()
        if total <= 0:
            raise EmptyInput("Sample carries no weight")
        return cls(hist / total)

    @property
    def support_bound(self) -> int:
        return len(self.probabilities) - 1

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probabilities)), self.probabilities))

    def __getitem__(self, k: int) -> float:
        return float(self.probabilities[k]) if 0 <= k < len(self.probabilities) else 0.0

    def truncated(self, tail_mass: float | None = None) -> "CountPmf":
        """Cut at the smallest K with P(count ≤ K) ≥ 1 − tail_mass; the rest goes into bucket K."""
        p = self.probabilities
        cdf = np.cumsum(p)
        cut = int(np.searchsorted(cdf, 1.0 - _tail_mass(tail_mass), side="left"))
        cut = min(cut, len(p) - 1)
        head = p[: cut + 1].copy()
        head[-1] += max(0.0, 1.0 - head.sum())
        return CountPmf(head / head.sum())


def _padded(p: np.ndarray, size: int) -> np.ndarray:
    return np.pad(p, (0, size - len(p)))


def tv_distance(p: CountPmf, q: CountPmf, tail_mass: float | None = None) -> float:
    """½ Σ_k |p_k − q_k| over the union of the (truncated) supports."""
    a = p.truncated(tail_mass).probabilities
    b = q.truncated(tail_mass).probabilities
    size = max(len(a), len(b))
    return float(0.5 * np.abs(_padded(a, size) - _padded(b, size)).sum())


def ks_two_sample(samples_a, samples_b) -> tuple[float, float]:
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise EmptyInput("Two-sample KS needs two nonempty samples")
    result = stats.ks_2samp(a, b, method="asymp")
    return float(result.statistic), float(result.pvalue)


def closed_form_poisson_pmf(mean: float, tail_mass: float | None = None) -> CountPmf:
    """Poisson(mean) count pmf cut at the 1 − tail_mass quantile, tail folded into the last bucket."""
    if mean < 0:
        raise ValueError(f"Poisson mean must be nonnegative, got {mean}")
    if mean == 0:
        return CountPmf.point_mass(0)
    cut = int(stats.poisson.ppf(1.0 - _tail_mass(tail_mass), mean))
    ks = np.arange(cut + 1)
    p = stats.poisson.pmf(ks, mean)
    p[-1] += stats.poisson.sf(cut, mean)
    return CountPmf(p / p.sum())
