from __future__ import annotations

import logging

import numpy as np

from patterns.geometry import Region
from patterns.rng import RngState
from patterns.services import count_in, factorial_power_count, is_simple, power_count
from processes.base import ProcessModel

from .identities import CheckReport
from .replicates import mean_and_se, run_replicates

logger = logging.getLogger(__name__)


def moment_consistency(
    model: ProcessModel,
    region: Region,
    n_reps: int,
    rng_state: RngState,
    *,
    z_crit: float | None = None,
    threads: int | None = None,
) -> dict[str, CheckReport]:
    """Monte Carlo moments of Φ(B) against the model's moment measures.

    Reports ``first_moment`` always, ``second_factorial_moment`` when the model
    exposes a product density, and two exact per-pattern checks:
    ``power_identity`` (Φ(B)² = Φ^(2)(B×B) + Φ(B)) and ``simple`` (number of
    patterns with repeated atoms, expected 0).
    """
    second_order = model.has_product_density2

    def block(size: int, rng: np.random.Generator) -> np.ndarray:
        # columns: n, n(n-1) by Möbius, n^2, repeated-atom flag
        out = np.zeros((size, 4))
        for r in range(size):
            pattern = model.sample(rng)
            out[r, 0] = count_in(pattern, region)
            out[r, 1] = factorial_power_count(pattern, (region, region))
            out[r, 2] = power_count(pattern, (region, region))
            out[r, 3] = 0.0 if is_simple(pattern) else 1.0
        return out

    table = np.concatenate(run_replicates(n_reps, rng_state, block, threads))
    reports: dict[str, CheckReport] = {}

    mean, se = mean_and_se(table[:, 0])
    reports["first_moment"] = CheckReport.compare(mean, model.mean_count(region), se, 0.0, z_crit)
    if second_order:
        mean2, se2 = mean_and_se(table[:, 1])
        reports["second_factorial_moment"] = CheckReport.compare(
            mean2, model.second_factorial_moment(region), se2, 0.0, z_crit
        )
    mismatches = int(np.count_nonzero(table[:, 2] != table[:, 1] + table[:, 0]))
    reports["power_identity"] = CheckReport.compare(float(mismatches), 0.0, 0.0, 0.0, z_crit)
    reports["simple"] = CheckReport.compare(float(table[:, 3].sum()), 0.0, 0.0, 0.0, z_crit)

    logger.info(
        "Moment consistency | model=%s reps=%s passed=%s",
        model.describe(), n_reps, all(r.passed for r in reports.values()),
    )
    return reports
