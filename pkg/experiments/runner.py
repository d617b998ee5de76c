"""Run a parsed config and write the results CSV.

Experiment ``i`` draws from ``RngState(seed).spawn(i)``, so its numbers do not
depend on which experiments ran before it. A failing experiment becomes one
failed row with the error text and the run moves on.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from django.conf import settings

from palm.samplers import chained_reduced_palm_sample
from palm.superposition import SuperposedModel
from palm.weights import chain_rule_two_point_weights, leaf_weights
from patterns.geometry import Point
from patterns.quadrature import quadrature_grid
from patterns.rng import RngState
from patterns.services import add_atom, remove_atom
from processes.base import ProcessModel
from processes.exceptions import InvalidModel, NoAnalyticPalm
from verify.identities import (
    CheckReport,
    campbell_check,
    laplace_derivative_check,
    laplace_factorization_check,
    laplace_split_check,
)
from verify.moments import moment_consistency
from verify.oracles import palm_weighting_oracle, two_point_weighting_oracle
from verify.replicates import collect_values
from verify.stats import CountPmf, closed_form_poisson_pmf, ks_two_sample, tv_distance

from .builders import build_models
from .config import ExperimentConfig, ExperimentSpec

logger = logging.getLogger(__name__)

COLUMNS = (
    "experiment_id",
    "check",
    "lhs",
    "rhs",
    "statistic",
    "threshold",
    "passed",
    "replicates",
    "seconds",
    "seed",
    "error",
)

DEFAULT_WEIGHT_TOLERANCE = 1e-12
DEFAULT_TV_THRESHOLD = {"palm_vs_oracle": 0.03, "two_point_vs_oracle": 0.05}
DEFAULT_KS_MIN_PVALUE = 1e-4
DEFAULT_RELATIVE_TOLERANCE = 0.02
DEFAULT_ASSOCIATIVITY_POINTS = 100


@dataclass(frozen=True)
class ResultRow:
    """One check. ``passed`` means ``statistic`` is within ``threshold``.

    For TV, z-scores and absolute or relative errors that is
    ``statistic <= threshold``; for KS p-values it is ``statistic >= threshold``.
    """

    experiment_id: str
    check: str
    lhs: float | None
    rhs: float | None
    statistic: float | None
    threshold: float | None
    passed: bool
    replicates: int
    seed: int
    seconds: float | None = None
    error: str = ""

    def as_csv(self, record_timings: bool) -> list[str]:
        seconds = self.seconds if record_timings else None
        return [
            self.experiment_id,
            self.check,
            _fmt(self.lhs),
            _fmt(self.rhs),
            _fmt(self.statistic),
            _fmt(self.threshold),
            "true" if self.passed else "false",
            str(self.replicates),
            "" if seconds is None else f"{seconds:.3f}",
            str(self.seed),
            self.error,
        ]


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


@dataclass(frozen=True)
class _Context:
    spec: ExperimentSpec
    model: ProcessModel
    config: ExperimentConfig
    rng_state: RngState
    threads: int | None

    @property
    def replicates(self) -> int:
        return self.spec.get("replicates", self.config.replicates)

    @property
    def z_crit(self) -> float:
        return self.spec.get("z_crit", self.config.z_crit)

    @property
    def epsilon(self) -> float:
        return self.spec.get("epsilon", self.config.epsilon)

    def row(self, check: str, lhs, rhs, statistic, threshold, passed: bool, replicates: int | None = None) -> ResultRow:
        return ResultRow(
            experiment_id=self.spec.id,
            check=check,
            lhs=lhs,
            rhs=rhs,
            statistic=statistic,
            threshold=threshold,
            passed=bool(passed),
            replicates=self.replicates if replicates is None else replicates,
            seed=self.config.seed,
        )

    def check_row(self, check: str, report: CheckReport, replicates: int | None = None) -> ResultRow:
        return self.row(check, report.lhs, report.rhs, report.z_score, report.z_crit, report.passed, replicates)

    def close_row(self, check: str, lhs: float, rhs: float, tolerance: float, relative: bool = False) -> ResultRow:
        diff = abs(lhs - rhs)
        if relative:
            diff = diff / abs(rhs) if rhs else (0.0 if diff == 0 else math.inf)
        return self.row(check, lhs, rhs, diff, tolerance, diff <= tolerance, replicates=0)

    def tv_row(self, check: str, p: CountPmf, q: CountPmf, threshold: float) -> ResultRow:
        tv = tv_distance(p, q)
        return self.row(check, p.mean, q.mean, tv, threshold, tv <= threshold)

    def ks_row(self, check: str, a: np.ndarray, b: np.ndarray, n: int) -> ResultRow:
        threshold = self.spec.get("ks_min_pvalue", DEFAULT_KS_MIN_PVALUE)
        _, p_value = ks_two_sample(a, b)
        return self.row(check, float(np.mean(a)), float(np.mean(b)), p_value, threshold, p_value >= threshold, n)


def _superposition(model: ProcessModel) -> SuperposedModel:
    if not isinstance(model, SuperposedModel):
        raise InvalidModel(f"{model.describe()} is not a superposition")
    return model


def _statistic_values(draw: Callable[[np.random.Generator], int], n: int, ctx: _Context, stream: int) -> np.ndarray:
    return collect_values(n, ctx.rng_state.spawn(stream), draw, ctx.threads).astype(np.int64)


def _leaves(model: ProcessModel) -> list[ProcessModel]:
    if isinstance(model, SuperposedModel):
        return list(model.flatten().components)
    return [model]


def _regroupings(leaves: list[ProcessModel]) -> list[ProcessModel]:
    """Flat, left-nested and right-nested groupings of the same leaves."""
    left = leaves[0]
    for leaf in leaves[1:]:
        left = SuperposedModel([left, leaf])
    right = leaves[-1]
    for leaf in reversed(leaves[:-1]):
        right = SuperposedModel([leaf, right])
    return [SuperposedModel(leaves), left, right]


def run_weights_exact(ctx: _Context) -> list[ResultRow]:
    model = _superposition(ctx.model)
    tol = ctx.spec.get("tolerance", DEFAULT_WEIGHT_TOLERANCE)
    x: Point = ctx.spec["x"]
    y: Point | None = ctx.spec.get("y")
    expected = ctx.spec.get("expected")
    rows: list[ResultRow] = []
    if y is None:
        weights = model.mixture_weights(x)
        total = model.intensity(x)
        for j, component in enumerate(model.components):
            rows.append(ctx.close_row(f"weight[{j}]", weights[j], component.intensity(x) / total, tol))
        if expected is not None:
            if len(expected) != len(weights):
                raise InvalidModel(f"expected has {len(expected)} values, model has {len(weights)} components")
            rows += [ctx.close_row(f"expected[{j}]", weights[j], v, tol) for j, v in enumerate(expected)]
        leaves = _leaves(model)
        if len(leaves) >= 3:
            rows.append(_associativity_row(ctx, model, leaves, tol))
        return rows

    direct = model.two_point_weights(x, y)
    chained = chain_rule_two_point_weights(model, x, y)
    names = ("w11", "w12", "w21", "w22")
    for name, lhs, rhs in zip(names, direct.as_tuple(), chained.as_tuple()):
        rows.append(ctx.close_row(name, lhs, rhs, tol))
    rows.append(ctx.close_row("normalizer", direct.normalizer, model.product_density2(x, y), tol, relative=True))
    if expected is not None:
        if len(expected) != 4:
            raise InvalidModel("expected needs four two-point weights")
        rows += [ctx.close_row(f"expected_{n}", lhs, v, tol) for n, lhs, v in zip(names, direct.as_tuple(), expected)]
    return rows


def _associativity_row(ctx: _Context, model: SuperposedModel, leaves: list[ProcessModel], tol: float) -> ResultRow:
    n_points = ctx.spec.get("associativity_points", DEFAULT_ASSOCIATIVITY_POINTS)
    points = ctx.model.window.uniform(ctx.rng_state.generator(), n_points)
    groupings = [model] + _regroupings(leaves)
    worst = 0.0
    for row in points:
        x = Point.from_array(row)
        reference = np.array([w for _, w in leaf_weights(groupings[0], x)])
        for grouping in groupings[1:]:
            other = np.array([w for _, w in leaf_weights(grouping, x)])
            worst = max(worst, float(np.max(np.abs(reference - other))))
    return ctx.row("associativity", worst, 0.0, worst, tol, worst <= tol, replicates=n_points)


def run_palm_vs_oracle(ctx: _Context) -> list[ResultRow]:
    model, spec = ctx.model, ctx.spec
    x: Point = spec["x"]
    statistic = spec["statistic"]
    reduced = spec.get("reduced", False)
    threshold = spec.get("tv_threshold", DEFAULT_TV_THRESHOLD["palm_vs_oracle"])
    n_sampler = spec.get("sampler_replicates", ctx.replicates)
    reference = spec.get("reference_poisson_mean")
    if not model.has_analytic_palm and reference is None:
        raise NoAnalyticPalm(model)

    oracle = palm_weighting_oracle(
        model, x, ctx.epsilon, ctx.replicates, statistic, ctx.rng_state.spawn(0), reduced=reduced, threads=ctx.threads
    )
    rows: list[ResultRow] = []
    if model.has_analytic_palm:
        sampler = model.reduced_palm_sample if reduced else model.palm_sample
        values = _statistic_values(lambda rng: statistic(sampler(x, rng)), n_sampler, ctx, 1)
        rows.append(ctx.tv_row("tv_oracle_vs_palm_sampler", oracle.pmf, CountPmf.from_counts(values), threshold))
    if reference is not None:
        rows.append(ctx.tv_row("tv_oracle_vs_poisson", oracle.pmf, closed_form_poisson_pmf(reference), threshold))
    if spec.get("reduced_consistency") and model.has_analytic_palm:
        composed = _statistic_values(lambda rng: statistic(remove_atom(model.palm_sample(x, rng), x)), n_sampler, ctx, 2)
        direct = _statistic_values(lambda rng: statistic(model.reduced_palm_sample(x, rng)), n_sampler, ctx, 3)
        rows.append(ctx.ks_row("ks_reduced_composed_vs_direct", composed, direct, n_sampler))
    return rows


def run_two_point_vs_oracle(ctx: _Context) -> list[ResultRow]:
    model, spec = ctx.model, ctx.spec
    x: Point = spec["x"]
    y: Point = spec["y"]
    statistic = spec["statistic"]
    reduced = spec.get("reduced", True)
    threshold = spec.get("tv_threshold", DEFAULT_TV_THRESHOLD["two_point_vs_oracle"])
    n_sampler = spec.get("sampler_replicates", ctx.replicates)
    reference = spec.get("reference_poisson_mean")
    if not model.has_two_point_palm and reference is None:
        raise NoAnalyticPalm(model, "two-point reduced Palm sampler")

    oracle = two_point_weighting_oracle(
        model, x, y, ctx.epsilon, ctx.replicates, statistic, ctx.rng_state.spawn(0), reduced=reduced, threads=ctx.threads
    )
    rows: list[ResultRow] = []
    if model.has_two_point_palm:

        def direct(rng: np.random.Generator):
            pattern = model.two_point_reduced_palm_sample(x, y, rng)
            return pattern if reduced else add_atom(add_atom(pattern, x), y)

        values = _statistic_values(lambda rng: statistic(direct(rng)), n_sampler, ctx, 1)
        rows.append(ctx.tv_row("tv_oracle_vs_two_point_sampler", oracle.pmf, CountPmf.from_counts(values), threshold))
        if spec.get("chained"):
            superposed = _superposition(model)
            chained = _statistic_values(
                lambda rng: statistic(chained_reduced_palm_sample(superposed, x, y, rng)), n_sampler, ctx, 2
            )
            plain = _statistic_values(lambda rng: statistic(model.two_point_reduced_palm_sample(x, y, rng)), n_sampler, ctx, 3)
            rows.append(ctx.ks_row("ks_chained_vs_direct", chained, plain, n_sampler))
    if reference is not None:
        rows.append(ctx.tv_row("tv_oracle_vs_poisson", oracle.pmf, closed_form_poisson_pmf(reference), threshold))
    return rows


def _grid(ctx: _Context):
    nodes = ctx.spec.get("nodes_per_axis")
    return quadrature_grid(ctx.model.window, nodes_per_axis=nodes) if nodes else None


def run_campbell(ctx: _Context) -> list[ResultRow]:
    report = campbell_check(
        ctx.model,
        ctx.spec["g"],
        ctx.spec["h"],
        ctx.replicates,
        ctx.rng_state,
        grid=_grid(ctx),
        palm_reps_per_node=ctx.spec.get("palm_reps_per_node"),
        z_crit=ctx.z_crit,
        threads=ctx.threads,
    )
    return [ctx.check_row("campbell_z", report)]


def run_laplace_derivative(ctx: _Context) -> list[ResultRow]:
    spec = ctx.spec
    t_step = spec.get("t_step", ctx.config.t_step)
    report = laplace_derivative_check(
        ctx.model,
        spec["f"],
        spec["g"],
        ctx.replicates,
        ctx.rng_state.spawn(0),
        t_step=t_step,
        grid=_grid(ctx),
        palm_reps_per_node=spec.get("palm_reps_per_node"),
        z_crit=ctx.z_crit,
        threads=ctx.threads,
    )
    rows = [ctx.check_row("laplace_derivative_z", report)]
    closed_form = spec.get("closed_form")
    if closed_form is not None:
        tol = spec.get("relative_tolerance", DEFAULT_RELATIVE_TOLERANCE)
        rows.append(replace(ctx.close_row("closed_form_relative_error", report.lhs, closed_form, tol, relative=True), replicates=ctx.replicates))
    if spec.get("factorization"):
        model = _superposition(ctx.model)
        report = laplace_factorization_check(model, spec["f"], ctx.replicates, ctx.rng_state.spawn(1), z_crit=ctx.z_crit, threads=ctx.threads)
        rows.append(ctx.check_row("laplace_factorization_z", report))
    if spec.get("split"):
        model = _superposition(ctx.model)
        report = laplace_split_check(
            model, spec["f"], spec["g"], ctx.replicates, ctx.rng_state.spawn(2),
            t_step=t_step, z_crit=ctx.z_crit, threads=ctx.threads,
        )
        rows.append(ctx.check_row("laplace_split_z", report))
    return rows


def run_moment_consistency(ctx: _Context) -> list[ResultRow]:
    reports = moment_consistency(
        ctx.model, ctx.spec["region"], ctx.replicates, ctx.rng_state, z_crit=ctx.z_crit, threads=ctx.threads
    )
    return [ctx.check_row(name, report) for name, report in reports.items()]


RUNNERS: dict[str, Callable[[_Context], list[ResultRow]]] = {
    "weights_exact": run_weights_exact,
    "palm_vs_oracle": run_palm_vs_oracle,
    "two_point_vs_oracle": run_two_point_vs_oracle,
    "campbell": run_campbell,
    "laplace_derivative": run_laplace_derivative,
    "moment_consistency": run_moment_consistency,
}


def write_csv(rows: Iterable[ResultRow], path: str | Path, record_timings: bool | None = None) -> Path:
    if record_timings is None:
        record_timings = bool(getattr(settings, "PALM_RECORD_TIMINGS", False))
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv(record_timings))
    return path


def run(config: ExperimentConfig, *, out: str | Path | None = None, threads: int | None = None) -> list[ResultRow]:
    """Execute the experiments in declared order and write the CSV to ``out`` (default: config output)."""
    models = build_models(config)
    master = RngState(config.seed)
    rows: list[ResultRow] = []
    for index, spec in enumerate(config.experiments):
        ctx = _Context(spec, models[spec["model"]], config, master.spawn(index), threads)
        started = time.perf_counter()
        try:
            produced = RUNNERS[spec.kind](ctx)
        except Exception as exc:
            logger.exception("Experiment failed | id=%s type=%s", spec.id, spec.kind)
            produced = [
                ResultRow(
                    experiment_id=spec.id,
                    check=spec.kind,
                    lhs=None,
                    rhs=None,
                    statistic=None,
                    threshold=None,
                    passed=False,
                    replicates=ctx.replicates,
                    seed=config.seed,
                    error=f"{type(exc).__name__}: {exc}",
                )
            ]
        elapsed = time.perf_counter() - started
        rows.extend(replace(row, seconds=elapsed) for row in produced)
        logger.info(
            "Experiment finished | id=%s type=%s rows=%s passed=%s seconds=%.2f",
            spec.id, spec.kind, len(produced), all(r.passed for r in produced), elapsed,
        )
    target = write_csv(rows, out or config.output)
    logger.info("Results written | path=%s rows=%s", target, len(rows))
    return rows
