"""Two-sided Monte Carlo checks of the Campbell and Laplace identities.

Left-hand sides use the unconditional sampler, right-hand sides integrate
Palm expectations against the intensity on a midpoint grid, estimating each
node's Palm expectation from ``palm_reps_per_node`` Palm samples. Every
report carries standard errors and the z-score of the difference.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from django.conf import settings

from patterns.geometry import Point
from patterns.pattern import PointPattern
from patterns.quadrature import QuadratureGrid, quadrature_grid
from patterns.rng import RngState
from processes.base import ProcessModel
from processes.exceptions import NoAnalyticPalm

from .functions import pattern_sum
from .replicates import collect_values, map_streams, mean_and_se, run_replicates

logger = logging.getLogger(__name__)

PointFunction = Callable[[np.ndarray], np.ndarray]
PatternFunctional = Callable[[PointPattern], float]

MIN_PALM_REPS_PER_NODE = 2
TINY = float(np.finfo(float).tiny)


def _z_crit(z_crit: float | None) -> float:
    return float(z_crit if z_crit is not None else getattr(settings, "PALM_Z_CRIT", 4.0))


@dataclass(frozen=True)
class CheckReport:
    lhs: float
    rhs: float
    se_lhs: float
    se_rhs: float
    z_score: float
    passed: bool
    z_crit: float

    @classmethod
    def compare(cls, lhs: float, rhs: float, se_lhs: float, se_rhs: float, z_crit: float | None = None) -> "CheckReport":
        z_crit = _z_crit(z_crit)
        diff = lhs - rhs
        scale = math.sqrt(se_lhs * se_lhs + se_rhs * se_rhs)
        if scale > 0:
            z = diff / scale
        else:
            z = 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return cls(
            lhs=float(lhs),
            rhs=float(rhs),
            se_lhs=float(se_lhs),
            se_rhs=float(se_rhs),
            z_score=float(z),
            passed=abs(diff) <= z_crit * scale,
            z_crit=z_crit,
        )


class LaplaceEstimate(NamedTuple):
    value: float
    se: float


def _require_palm(model: ProcessModel) -> None:
    if not model.has_analytic_palm:
        raise NoAnalyticPalm(model)


def _palm_integral(
    model: ProcessModel,
    weight_fn: PointFunction,
    functional: PatternFunctional,
    n_reps: int,
    rng_state: RngState,
    grid: QuadratureGrid | None,
    palm_reps_per_node: int | None,
    threads: int | None,
) -> tuple[float, float]:
    """∫ weight_fn(x) · E[functional(Φ_x)] · m(x) dx and its standard error."""
    grid = grid or quadrature_grid(model.window)
    nodes = grid.nodes[model.window.contains(grid.nodes)]
    if len(nodes) == 0:
        return 0.0, 0.0
    density = weight_fn(nodes) * model.intensity_at(nodes)
    active = np.flatnonzero(density != 0)
    if active.size == 0:
        return 0.0, 0.0
    per_node = palm_reps_per_node or math.ceil(n_reps / active.size)
    per_node = max(MIN_PALM_REPS_PER_NODE, int(per_node))

    def node(i: int, rng: np.random.Generator) -> tuple[float, float]:
        x = Point.from_array(nodes[i])
        values = np.fromiter((functional(model.palm_sample(x, rng)) for _ in range(per_node)), dtype=float, count=per_node)
        return float(values.mean()), float(values.var(ddof=1))

    moments = np.asarray(map_streams(rng_state, list(active), node, threads))
    weights = density[active]
    value = grid.cell_volume * float(np.sum(weights * moments[:, 0]))
    se = grid.cell_volume * math.sqrt(float(np.sum(weights * weights * moments[:, 1])) / per_node)
    return value, se


def campbell_check(
    model: ProcessModel,
    g: PointFunction,
    h: PatternFunctional,
    n_reps: int,
    rng_state: RngState,
    *,
    grid: QuadratureGrid | None = None,
    palm_reps_per_node: int | None = None,
    z_crit: float | None = None,
    threads: int | None = None,
) -> CheckReport:
    """E[Σ_{X∈Φ} g(X)·h(Φ)] against ∫ g(x)·E[h(Φ_x)]·m(x) dx."""
    _require_palm(model)

    def draw(rng: np.random.Generator) -> float:
        pattern = model.sample(rng)
        weight = pattern_sum(g, pattern)
        return weight * h(pattern) if weight else 0.0

    lhs, se_lhs = mean_and_se(collect_values(n_reps, rng_state.spawn(0), draw, threads))
    rhs, se_rhs = _palm_integral(model, g, h, n_reps, rng_state.spawn(1), grid, palm_reps_per_node, threads)
    report = CheckReport.compare(lhs, rhs, se_lhs, se_rhs, z_crit)
    logger.info("Campbell check | model=%s reps=%s z=%.3f passed=%s", model.describe(), n_reps, report.z_score, report.passed)
    return report


def laplace_estimate(
    model: ProcessModel,
    f: PointFunction,
    n_reps: int,
    rng_state: RngState,
    *,
    threads: int | None = None,
) -> LaplaceEstimate:
    """E[exp(−Σ_{X∈Φ} f(X))] with its standard error.

    The value stays in (0, 1]: when every replicate underflows it is reported
    as the smallest positive float with se 0, and a warning is logged.
    """
    values = collect_values(n_reps, rng_state, lambda rng: math.exp(-pattern_sum(f, model.sample(rng))), threads)
    value, se = mean_and_se(values)
    if value <= 0.0:
        logger.warning("Laplace estimate underflowed | model=%s reps=%s", model.describe(), n_reps)
        return LaplaceEstimate(TINY, 0.0)
    return LaplaceEstimate(value, se)


def _derivative_values(model: ProcessModel, f, g, t_step: float, n_reps: int, rng_state: RngState, threads) -> np.ndarray:
    """Per-replicate central differences; both evaluations share the replicate."""

    def draw(rng: np.random.Generator) -> float:
        pattern = model.sample(rng)
        base = pattern_sum(f, pattern)
        bump = pattern_sum(g, pattern)
        return (math.exp(-(base + t_step * bump)) - math.exp(-(base - t_step * bump))) / (2.0 * t_step)

    return collect_values(n_reps, rng_state, draw, threads)


def _t_step(t_step: float | None) -> float:
    t = float(t_step if t_step is not None else getattr(settings, "PALM_T_STEP", 1e-3))
    if not t > 0:
        raise ValueError(f"t_step must be positive, got {t}")
    return t


def laplace_derivative_check(
    model: ProcessModel,
    f: PointFunction,
    g: PointFunction,
    n_reps: int,
    rng_state: RngState,
    *,
    t_step: float | None = None,
    grid: QuadratureGrid | None = None,
    palm_reps_per_node: int | None = None,
    z_crit: float | None = None,
    threads: int | None = None,
) -> CheckReport:
    """∂_t L_Φ(f + t·g) at t = 0 against −∫ g(x)·L_{Φ_x}(f)·m(x) dx."""
    _require_palm(model)
    t = _t_step(t_step)
    lhs, se_lhs = mean_and_se(_derivative_values(model, f, g, t, n_reps, rng_state.spawn(0), threads))
    rhs, se_rhs = _palm_integral(
        model, g, lambda pattern: math.exp(-pattern_sum(f, pattern)),
        n_reps, rng_state.spawn(1), grid, palm_reps_per_node, threads,
    )
    report = CheckReport.compare(lhs, -rhs, se_lhs, se_rhs, z_crit)
    logger.info(
        "Laplace derivative check | model=%s reps=%s t=%s z=%.3f passed=%s",
        model.describe(), n_reps, t, report.z_score, report.passed,
    )
    return report


def laplace_factorization_check(
    model,
    f: PointFunction,
    n_reps: int,
    rng_state: RngState,
    *,
    z_crit: float | None = None,
    threads: int | None = None,
) -> CheckReport:
    """L_{Φ₁+…+Φ_k}(f) against Π_j L_{Φ_j}(f), each estimated from its own stream."""
    joint = laplace_estimate(model, f, n_reps, rng_state.spawn(0), threads=threads)
    parts = [
        laplace_estimate(c, f, n_reps, rng_state.spawn(1, j), threads=threads)
        for j, c in enumerate(model.components)
    ]
    product = math.prod(p.value for p in parts)
    relative = math.sqrt(sum((p.se / p.value) ** 2 for p in parts if p.value > 0))
    report = CheckReport.compare(joint.value, product, joint.se, product * relative, z_crit)
    logger.info("Laplace factorization check | model=%s reps=%s z=%.3f", model.describe(), n_reps, report.z_score)
    return report


def laplace_split_check(
    model,
    f: PointFunction,
    g: PointFunction,
    n_reps: int,
    rng_state: RngState,
    *,
    t_step: float | None = None,
    z_crit: float | None = None,
    threads: int | None = None,
) -> CheckReport:
    """Derivative of the superposition's Laplace functional against its componentwise split.

    RHS per replicate is ``−Σ_j Φ_j(g)·e^{−Φ_j(f)}·Π_{ℓ≠j} e^{−Φ_ℓ(f)}`` on
    independent component draws, whose mean is
    ``−Σ_j E[Φ_j(g) e^{−Φ_j(f)}] Π_{ℓ≠j} L_{Φ_ℓ}(f)``.
    """
    t = _t_step(t_step)
    lhs, se_lhs = mean_and_se(_derivative_values(model, f, g, t, n_reps, rng_state.spawn(0), threads))
    components = model.components

    def block(size: int, rng: np.random.Generator) -> np.ndarray:
        out = np.empty(size)
        for r in range(size):
            patterns = [c.sample(rng) for c in components]
            decay = math.prod(math.exp(-pattern_sum(f, p)) for p in patterns)
            out[r] = -sum(pattern_sum(g, p) for p in patterns) * decay
        return out

    rhs, se_rhs = mean_and_se(np.concatenate(run_replicates(n_reps, rng_state.spawn(1), block, threads)))
    report = CheckReport.compare(lhs, rhs, se_lhs, se_rhs, z_crit)
    logger.info("Laplace split check | model=%s reps=%s z=%.3f", model.describe(), n_reps, report.z_score)
    return report
