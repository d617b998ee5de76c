"""Points, windows and counting regions in R^d, d in {1, 2, 3}.

Everything here is an immutable value. Vectorised membership tests take an
``(n, d)`` float array and return an ``(n,)`` boolean mask; boundaries are
closed (``<=`` on box faces, ``<= radius`` for balls).
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .exceptions import InvalidGeometry, OutOfWindow

SUPPORTED_DIMS = (1, 2, 3)


@dataclass(slots=True, frozen=True)
class Point:
    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        coords = tuple(float(c) for c in self.coords)
        if len(coords) not in SUPPORTED_DIMS:
            raise InvalidGeometry(f"Points must have 1, 2 or 3 coordinates, got {len(coords)}")
        if not all(math.isfinite(c) for c in coords):
            raise InvalidGeometry(f"Point coordinates must be finite, got {coords}")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, *coords: float) -> "Point":
        return cls(tuple(coords))

    @classmethod
    def from_array(cls, row: np.ndarray) -> "Point":
        return cls(tuple(float(c) for c in row))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def __str__(self) -> str:  # pragma: no cover
        return "(" + ", ".join(f"{c:g}" for c in self.coords) + ")"


class Region(ABC):
    """A bounded Borel set used as a counting region B."""

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @property
    @abstractmethod
    def volume(self) -> float: ...

    @abstractmethod
    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of the rows of ``points`` lying in the (closed) region."""

    @abstractmethod
    def bounding_box(self) -> "Box": ...

    def contains_point(self, point: Point) -> bool:
        return bool(self.contains(point.as_array()[None, :])[0])


@dataclass(frozen=True)
class Box(Region):
    lower: Point
    upper: Point

    def __post_init__(self) -> None:
        if self.lower.dim != self.upper.dim:
            raise InvalidGeometry("Box corners have different dimensions")
        if any(lo >= hi for lo, hi in zip(self.lower.coords, self.upper.coords)):
            raise InvalidGeometry(f"Box needs lower < upper componentwise, got {self.lower} and {self.upper}")

    @classmethod
    def from_bounds(cls, lower: Sequence[float], upper: Sequence[float]) -> "Box":
        return cls(Point(tuple(lower)), Point(tuple(upper)))

    @cached_property
    def _lo(self) -> np.ndarray:
        return self.lower.as_array()

    @cached_property
    def _hi(self) -> np.ndarray:
        return self.upper.as_array()

    @property
    def dim(self) -> int:
        return self.lower.dim

    @property
    def widths(self) -> np.ndarray:
        return self._hi - self._lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def midpoint(self) -> Point:
        return Point.from_array((self._lo + self._hi) / 2.0)

    def contains(self, points: np.ndarray) -> np.ndarray:
        if len(points) == 0:
            return np.zeros(0, dtype=bool)
        return np.all((points >= self._lo) & (points <= self._hi), axis=1)

    def bounding_box(self) -> "Box":
        return Box(self.lower, self.upper)

    def intersect(self, other: "Box") -> "Box | None":
        lo = np.maximum(self._lo, other._lo)
        hi = np.minimum(self._hi, other._hi)
        if np.any(lo >= hi):
            return None
        return Box(Point.from_array(lo), Point.from_array(hi))

    def encloses(self, region: Region) -> bool:
        bbox = region.bounding_box()
        return bool(np.all(bbox._lo >= self._lo) and np.all(bbox._hi <= self._hi))


@dataclass(frozen=True)
class Ball(Region):
    center: Point
    radius: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise InvalidGeometry(f"Ball radius must be positive, got {self.radius}")

    @cached_property
    def _c(self) -> np.ndarray:
        return self.center.as_array()

    @property
    def dim(self) -> int:
        return self.center.dim

    @property
    def volume(self) -> float:
        r = self.radius
        if self.dim == 1:
            return 2.0 * r
        if self.dim == 2:
            return math.pi * r * r
        return 4.0 / 3.0 * math.pi * r ** 3

    def contains(self, points: np.ndarray) -> np.ndarray:
        if len(points) == 0:
            return np.zeros(0, dtype=bool)
        diff = points - self._c
        return np.einsum("ij,ij->i", diff, diff) <= self.radius * self.radius

    def bounding_box(self) -> Box:
        return Box(Point.from_array(self._c - self.radius), Point.from_array(self._c + self.radius))

    def nearest_index(self, points: np.ndarray) -> int | None:
        """Index of the row of ``points`` inside the ball closest to the center."""
        if len(points) == 0:
            return None
        diff = points - self._c
        dist2 = np.einsum("ij,ij->i", diff, diff)
        dist2[dist2 > self.radius * self.radius] = np.inf
        idx = int(np.argmin(dist2))
        return idx if math.isfinite(dist2[idx]) else None


@dataclass(frozen=True)
class Window(Box):
    """The observation window: every pattern and model lives on one."""

    @classmethod
    def unit(cls, dim: int = 2) -> "Window":
        return cls(Point((0.0,) * dim), Point((1.0,) * dim))

    def uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self._lo + rng.random((n, self.dim)) * self.widths

    def dilated(self, margin: float) -> "Window":
        return Window(Point.from_array(self._lo - margin), Point.from_array(self._hi + margin))

    def require(self, point: Point) -> Point:
        if point.dim != self.dim or not self.contains_point(point):
            raise OutOfWindow(point, self)
        return point
