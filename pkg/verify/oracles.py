"""Campbell-weighting oracles for Palm distributions.

Each replicate Φ_i is weighted by the number of its atoms (or distinct atom
pairs) in small balls around the conditioning point(s). The weighted
empirical law of a statistic estimates its law under the Palm distribution
averaged over those balls, using nothing but the unconditional sampler.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from django.conf import settings

from patterns.exceptions import InvalidGeometry
from patterns.geometry import Ball, Point
from patterns.pattern import PointPattern
from patterns.rng import RngState
from patterns.services import factorial_power_count, remove_index
from processes.base import ProcessModel

from .exceptions import ZeroTotalWeight
from .replicates import run_replicates
from .stats import CountPmf

logger = logging.getLogger(__name__)

Statistic = Callable[[PointPattern], int]


@dataclass(frozen=True, eq=False)
class WeightedEnsemble:
    """Replicates with positive weight: statistic values, weights and (optionally) the patterns."""

    values: np.ndarray
    weights: np.ndarray
    n_replicates: int
    patterns: tuple[PointPattern, ...] | None = None

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def entries(self) -> list[tuple[PointPattern, float]]:
        if self.patterns is None:
            raise ValueError("Ensemble was built without keep_patterns")
        return list(zip(self.patterns, (float(w) for w in self.weights)))


@dataclass(frozen=True, eq=False)
class OracleResult:
    pmf: CountPmf
    ensemble: WeightedEnsemble


def _epsilon(epsilon: float | None) -> float:
    eps = float(epsilon if epsilon is not None else getattr(settings, "PALM_EPSILON", 0.02))
    if not eps > 0:
        raise InvalidGeometry(f"epsilon must be positive, got {eps}")
    return eps


def _ball(model: ProcessModel, x: Point, eps: float) -> Ball:
    model.window.require(x)
    ball = Ball(x, eps)
    if not model.window.encloses(ball):
        raise InvalidGeometry(f"Ball of radius {eps} around {x} leaves the window")
    return ball


def _merge(blocks: list[tuple], n_reps: int, keep_patterns: bool, label: str, model: ProcessModel) -> OracleResult:
    values = np.concatenate([b[0] for b in blocks])
    weights = np.concatenate([b[1] for b in blocks])
    if weights.sum() <= 0:
        logger.warning("Oracle without hits | oracle=%s model=%s reps=%s", label, model.describe(), n_reps)
        raise ZeroTotalWeight(
            f"No replicate out of {n_reps} hit the conditioning ball(s); raise the intensity, epsilon or n_reps"
        )
    patterns = tuple(p for b in blocks for p in b[2]) if keep_patterns else None
    ensemble = WeightedEnsemble(values=values, weights=weights, n_replicates=n_reps, patterns=patterns)
    logger.info(
        "Oracle finished | oracle=%s model=%s reps=%s hits=%s total_weight=%s",
        label, model.describe(), n_reps, len(weights), ensemble.total_weight,
    )
    return OracleResult(pmf=CountPmf.from_counts(values, weights), ensemble=ensemble)


def palm_weighting_oracle(
    model: ProcessModel,
    x: Point,
    epsilon: float | None,
    n_reps: int,
    statistic: Statistic,
    rng_state: RngState,
    *,
    reduced: bool = False,
    keep_patterns: bool = False,
    threads: int | None = None,
) -> OracleResult:
    """Weight w_i = Φ_i(B_ε(x)); the reduced variant drops the atom in the ball nearest x."""
    ball = _ball(model, x, _epsilon(epsilon))

    def block(size: int, rng: np.random.Generator):
        values, weights, kept = [], [], []
        for _ in range(size):
            pattern = model.sample(rng)
            if len(pattern) == 0:
                continue
            inside = ball.contains(pattern.points)
            w = int(np.count_nonzero(inside))
            if w == 0:
                continue
            if reduced:
                pattern = remove_index(pattern, ball.nearest_index(pattern.points))
            values.append(statistic(pattern))
            weights.append(w)
            if keep_patterns:
                kept.append(pattern)
        return np.asarray(values, dtype=np.int64), np.asarray(weights, dtype=float), kept

    blocks = run_replicates(n_reps, rng_state, block, threads)
    return _merge(blocks, n_reps, keep_patterns, "reduced_palm" if reduced else "palm", model)


def two_point_weighting_oracle(
    model: ProcessModel,
    x: Point,
    y: Point,
    epsilon: float | None,
    n_reps: int,
    statistic: Statistic,
    rng_state: RngState,
    *,
    reduced: bool = False,
    keep_patterns: bool = False,
    threads: int | None = None,
) -> OracleResult:
    """Weight w_i = Φ_i^(2)(B_ε(x) × B_ε(y)); reduced removes the nearest atom in each ball."""
    eps = _epsilon(epsilon)
    ball_x, ball_y = _ball(model, x, eps), _ball(model, y, eps)
    if float(np.linalg.norm(x.as_array() - y.as_array())) <= 2 * eps:
        raise InvalidGeometry(f"Balls of radius {eps} around {x} and {y} overlap")

    def block(size: int, rng: np.random.Generator):
        values, weights, kept = [], [], []
        for _ in range(size):
            pattern = model.sample(rng)
            if len(pattern) < 2:
                continue
            if not (ball_x.contains(pattern.points).any() and ball_y.contains(pattern.points).any()):
                continue
            w = factorial_power_count(pattern, (ball_x, ball_y))
            if w == 0:
                continue
            if reduced:
                drop = [ball_x.nearest_index(pattern.points), ball_y.nearest_index(pattern.points)]
                pattern = PointPattern(np.delete(pattern.points, drop, axis=0), pattern.window, validate=False)
            values.append(statistic(pattern))
            weights.append(w)
            if keep_patterns:
                kept.append(pattern)
        return np.asarray(values, dtype=np.int64), np.asarray(weights, dtype=float), kept

    blocks = run_replicates(n_reps, rng_state, block, threads)
    return _merge(blocks, n_reps, keep_patterns, "two_point_reduced" if reduced else "two_point", model)
