"""Mixture weights of the Palm kernel of a superposition.

Weights are ratios of moment-measure densities with respect to Lebesgue
measure on the window: at one point ``m_j(x) / Σ_ℓ m_ℓ(x)``; at two points the
four branch weights are proportional to
``(ρ₁(x,y), m₁(x)·m₂(y), m₁(y)·m₂(x), ρ₂(x,y))`` and their common normalizer is
the product density of the superposition at (x, y).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from patterns.geometry import Point
from processes.base import ProcessModel
from processes.exceptions import InvalidModel, ZeroIntensityAtPoint

from .exceptions import DegenerateConditioning

if TYPE_CHECKING:
    from .superposition import SuperposedModel

NORMALIZATION_TOLERANCE = 1e-12


def _check_probabilities(values: Sequence[float]) -> None:
    arr = np.asarray(values, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError(f"Weights must lie in [0, 1], got {values}")
    if abs(arr.sum() - 1.0) > NORMALIZATION_TOLERANCE:
        raise ValueError(f"Weights must sum to 1, got {arr.sum()!r}")


@dataclass(frozen=True)
class MixtureWeights:
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        _check_probabilities(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights)

    def __getitem__(self, j: int) -> float:
        return self.weights[j]

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class TwoPointWeights:
    """Branch probabilities: both atoms in Φ₁, x in Φ₁ and y in Φ₂, y in Φ₁ and x in Φ₂, both in Φ₂."""

    w_11: float
    w_12: float
    w_21: float
    w_22: float
    normalizer: float

    def __post_init__(self) -> None:
        _check_probabilities(self.as_tuple())

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w_11, self.w_12, self.w_21, self.w_22)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.as_tuple())


def _components(model_or_components) -> Sequence[ProcessModel]:
    return getattr(model_or_components, "components", model_or_components)


def mixture_weights(components: Sequence[ProcessModel] | "SuperposedModel", x: Point) -> MixtureWeights:
    components = _components(components)
    m = np.array([c.intensity(x) for c in components], dtype=float)
    total = m.sum()
    if total <= 0:
        raise ZeroIntensityAtPoint(x)
    return MixtureWeights(tuple(float(v) for v in m / total))


def leaf_weights(model: ProcessModel, x: Point) -> list[tuple[ProcessModel, float]]:
    """Per-leaf weights of a (possibly nested) superposition, by the chain rule."""
    components = getattr(model, "components", None)
    if components is None:
        return [(model, 1.0)]
    out: list[tuple[ProcessModel, float]] = []
    for component, weight in zip(components, mixture_weights(components, x).weights):
        if weight == 0:
            out.extend((leaf, 0.0) for leaf, _ in _zero_leaves(component))
            continue
        out.extend((leaf, weight * w) for leaf, w in leaf_weights(component, x))
    return out


def _zero_leaves(model: ProcessModel) -> list[tuple[ProcessModel, float]]:
    components = getattr(model, "components", None)
    if components is None:
        return [(model, 0.0)]
    return [pair for c in components for pair in _zero_leaves(c)]


def _pair(model: "SuperposedModel", x: Point, y: Point) -> tuple[ProcessModel, ProcessModel]:
    components = _components(model)
    if len(components) != 2:
        raise InvalidModel(f"Two-point weights are defined for two components, got {len(components)}")
    if x == y:
        raise DegenerateConditioning(x, y, "conditioning points coincide")
    return components[0], components[1]


def two_point_weights(model: "SuperposedModel", x: Point, y: Point) -> TwoPointWeights:
    first, second = _pair(model, x, y)
    u = np.array(
        [
            first.product_density2(x, y),
            first.intensity(x) * second.intensity(y),
            first.intensity(y) * second.intensity(x),
            second.product_density2(x, y),
        ]
    )
    total = float(u.sum())
    if total <= 0:
        raise DegenerateConditioning(x, y, "product density of the superposition vanishes")
    return TwoPointWeights(*(float(v) for v in u / total), normalizer=total)


def _chain(model: "SuperposedModel", x: Point, y: Point) -> tuple[np.ndarray, np.ndarray]:
    comps = _pair(model, x, y)
    m_x = np.array([c.intensity(x) for c in comps])
    m_y = np.array([c.intensity(y) for c in comps])
    first = np.zeros(2)
    second = np.zeros((2, 2))
    for j in range(2):
        if m_x[j] <= 0:
            continue
        at_y = m_y.copy()
        at_y[j] = comps[j].reduced_palm_intensity(x, y)
        branch_total = at_y.sum()
        if branch_total <= 0:
            continue
        first[j] = m_x[j] * branch_total
        second[j] = at_y / branch_total
    if first.sum() <= 0:
        raise DegenerateConditioning(x, y, "product density of the superposition vanishes")
    return first, second


def chain_rule_weights(model: "SuperposedModel", x: Point, y: Point) -> tuple[np.ndarray, np.ndarray]:
    """Sequential (x first, then y) branch probabilities.

    Returns ``(first, second)``: ``first[j]`` is the probability that the atom
    at x comes from component j, ``second[j]`` the conditional probabilities,
    given j, that the atom at y comes from component 0 or 1.

    Conditioning the one-point mixture at x on a further atom at y reweights
    each x-branch by its own intensity at y, ``D_j = ρ_j(x,y)/m_j(x) + m_ℓ(y)``,
    so ``first[j] ∝ m_j(x)·D_j``. The products ``first[j] * second[j][i]``
    equal :func:`two_point_weights`.
    """
    first, second = _chain(model, x, y)
    return first / first.sum(), second


def chain_rule_two_point_weights(model: "SuperposedModel", x: Point, y: Point) -> TwoPointWeights:
    first, second = _chain(model, x, y)
    normalizer = float(first.sum())
    joint = (first / normalizer)[:, None] * second
    return TwoPointWeights(
        w_11=float(joint[0, 0]),
        w_12=float(joint[0, 1]),
        w_21=float(joint[1, 0]),
        w_22=float(joint[1, 1]),
        normalizer=normalizer,
    )
