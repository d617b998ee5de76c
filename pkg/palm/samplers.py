"""Palm samplers for superpositions of independent processes.

Every sampler draws its branch with a single uniform (``pick_branch``) before
delegating to the component samplers, so replicate streams stay aligned
across sampler variants. The chained sampler draws two, one per point.
"""
from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from patterns.geometry import Point
from patterns.pattern import PointPattern
from patterns.rng import pick_branch
from patterns.services import superpose_all
from processes.exceptions import NoAnalyticPalm

from .weights import chain_rule_weights, mixture_weights, two_point_weights

if TYPE_CHECKING:
    from .superposition import SuperposedModel


def _require_palm(model: "SuperposedModel") -> None:
    missing = [c for c in model.components if not c.has_analytic_palm]
    if missing:
        raise NoAnalyticPalm(missing[0])


def palm_sample_superposition(model: "SuperposedModel", x: Point, rng: np.random.Generator) -> PointPattern:
    """Draw j with probability m_j(x)/Σm, then Φ_{j,x} plus independent copies of the others."""
    _require_palm(model)
    j = pick_branch(mixture_weights(model.components, x).as_array(), rng)
    parts = [c.palm_sample(x, rng) if i == j else c.sample(rng) for i, c in enumerate(model.components)]
    return superpose_all(parts)


def reduced_palm_sample_superposition(model: "SuperposedModel", x: Point, rng: np.random.Generator) -> PointPattern:
    _require_palm(model)
    j = pick_branch(mixture_weights(model.components, x).as_array(), rng)
    parts = [c.reduced_palm_sample(x, rng) if i == j else c.sample(rng) for i, c in enumerate(model.components)]
    return superpose_all(parts)


def _two_point_branch(model: "SuperposedModel", x_in: int, y_in: int, x: Point, y: Point, rng) -> PointPattern:
    first, second = model.components
    if x_in == y_in == 0:
        parts = [first.two_point_reduced_palm_sample(x, y, rng), second.sample(rng)]
    elif x_in == y_in == 1:
        parts = [first.sample(rng), second.two_point_reduced_palm_sample(x, y, rng)]
    elif x_in == 0:
        parts = [first.reduced_palm_sample(x, rng), second.reduced_palm_sample(y, rng)]
    else:
        parts = [first.reduced_palm_sample(y, rng), second.reduced_palm_sample(x, rng)]
    return superpose_all(parts)


# Branch order of TwoPointWeights as (component holding x, component holding y).
_BRANCHES = ((0, 0), (0, 1), (1, 0), (1, 1))


def two_point_reduced_palm_sample(model: "SuperposedModel", x: Point, y: Point, rng: np.random.Generator) -> PointPattern:
    """Reduced Palm version at (x, y) drawn from the four-branch mixture."""
    _require_palm(model)
    weights = two_point_weights(model, x, y)
    x_in, y_in = _BRANCHES[pick_branch(weights.as_array(), rng)]
    return _two_point_branch(model, x_in, y_in, x, y, rng)


def chained_reduced_palm_sample(model: "SuperposedModel", x: Point, y: Point, rng: np.random.Generator) -> PointPattern:
    """Reduced Palm at x, then reduced Palm at y of the resulting conditional superposition."""
    _require_palm(model)
    first, second = chain_rule_weights(model, x, y)
    x_in = pick_branch(first, rng)
    y_in = pick_branch(second[x_in], rng)
    return _two_point_branch(model, x_in, y_in, x, y, rng)
