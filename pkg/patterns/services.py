"""Counting-measure operations on point patterns.

``power_count`` and ``factorial_power_count`` evaluate the k-th power and the
k-th factorial power of the counting measure on a product of regions. The
factorial version is computed by Möbius inversion over set partitions of the
k slots, so it never enumerates tuples.
"""
from __future__ import annotations

import math
from typing import Iterator, Sequence

import numpy as np

from .exceptions import AtomNotFound, InvalidGeometry, WindowMismatch
from .geometry import Point, Region
from .pattern import PointPattern


def count_in(pattern: PointPattern, region: Region) -> int:
    """Number of atoms in ``region``, with multiplicity; closed boundary."""
    if len(pattern) == 0:
        return 0
    return int(np.count_nonzero(region.contains(pattern.points)))


def superpose(p1: PointPattern, p2: PointPattern) -> PointPattern:
    """Multiset union; ``p1``'s points come first."""
    if p1.window != p2.window:
        raise WindowMismatch(p1.window, p2.window)
    if len(p1) == 0:
        return p2
    if len(p2) == 0:
        return p1
    return PointPattern(np.concatenate([p1.points, p2.points]), p1.window, validate=False)


def superpose_all(patterns: Sequence[PointPattern]) -> PointPattern:
    if not patterns:
        raise ValueError("superpose_all needs at least one pattern")
    window = patterns[0].window
    for p in patterns[1:]:
        if p.window != window:
            raise WindowMismatch(window, p.window)
    arrays = [p.points for p in patterns if len(p)]
    if not arrays:
        return PointPattern.empty(window)
    return PointPattern(np.concatenate(arrays), window, validate=False)


def _atom_mask(pattern: PointPattern, x: Point) -> np.ndarray:
    if len(pattern) == 0:
        return np.zeros(0, dtype=bool)
    return np.all(pattern.points == x.as_array(), axis=1)


def add_atom(pattern: PointPattern, x: Point) -> PointPattern:
    """Append one copy of ``x`` (bit-exact coordinates)."""
    pattern.window.require(x)
    row = x.as_array()[None, :]
    if len(pattern) == 0:
        return PointPattern(row, pattern.window, validate=False)
    return PointPattern(np.concatenate([pattern.points, row]), pattern.window, validate=False)


def remove_atom(pattern: PointPattern, x: Point) -> PointPattern:
    """Delete exactly one copy of ``x`` (the last one stored)."""
    hits = np.flatnonzero(_atom_mask(pattern, x))
    if hits.size == 0:
        raise AtomNotFound(x)
    return PointPattern(np.delete(pattern.points, hits[-1], axis=0), pattern.window, validate=False)


def remove_index(pattern: PointPattern, index: int) -> PointPattern:
    return PointPattern(np.delete(pattern.points, index, axis=0), pattern.window, validate=False)


def has_atom(pattern: PointPattern, x: Point) -> bool:
    return bool(np.any(_atom_mask(pattern, x)))


def power_count(pattern: PointPattern, boxes: Sequence[Region]) -> int:
    """Φ^k(B_1 × … × B_k) = Π_i Φ(B_i)."""
    if len(boxes) < 1:
        raise InvalidGeometry("power_count needs k >= 1 regions")
    return math.prod(count_in(pattern, b) for b in boxes)


def _set_partitions(items: list[int]) -> Iterator[list[list[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in _set_partitions(rest):
        yield [[first]] + partition
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1:]


def factorial_power_count(pattern: PointPattern, boxes: Sequence[Region]) -> int:
    """Φ^(k)(B_1 × … × B_k): k-tuples of pairwise distinct indices with X_{j_i} ∈ B_i."""
    k = len(boxes)
    if k < 1:
        raise InvalidGeometry("factorial_power_count needs k >= 1 regions")
    if len(pattern) == 0:
        return 0
    masks = [b.contains(pattern.points) for b in boxes]
    total = 0
    for partition in _set_partitions(list(range(k))):
        term = 1
        for block in partition:
            joint = np.logical_and.reduce([masks[i] for i in block])
            term *= int(np.count_nonzero(joint))
            if term == 0:
                break
        sign_weight = math.prod((-1) ** (len(b) - 1) * math.factorial(len(b) - 1) for b in partition)
        total += sign_weight * term
    return total


def is_simple(pattern: PointPattern) -> bool:
    """True when no two atoms share coordinates."""
    if len(pattern) < 2:
        return True
    return len(np.unique(pattern.points, axis=0)) == len(pattern)
