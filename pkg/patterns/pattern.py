from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np

from .exceptions import InvalidGeometry
from .geometry import Point, Window


class PointPattern:
    """A finite multiset of points on a window: one realization of a point process.

    Points are stored as a read-only ``(n, d)`` array. Duplicates are allowed;
    equality is multiset equality on the same window.
    """

    __slots__ = ("_points", "window")

    def __init__(self, points: Iterable[Point] | np.ndarray, window: Window, *, validate: bool = True):
        if isinstance(points, np.ndarray):
            arr = np.asarray(points, dtype=float)
        else:
            rows = [p.coords for p in points]
            if len({len(r) for r in rows}) > 1:
                raise InvalidGeometry("Pattern points have mixed dimensions")
            arr = np.asarray(rows, dtype=float)
        if arr.size == 0:
            arr = np.empty((0, window.dim))
        if validate:
            # Callers keep their own array; internal samplers hand over ownership.
            arr = arr.copy()
            if arr.ndim != 2 or arr.shape[1] != window.dim:
                raise InvalidGeometry(f"Pattern points have shape {arr.shape}, window has dimension {window.dim}")
            if not np.all(np.isfinite(arr)):
                raise InvalidGeometry("Pattern contains non-finite coordinates")
            outside = ~window.contains(arr)
            if np.any(outside):
                raise InvalidGeometry(f"{int(outside.sum())} point(s) lie outside window {window}")
        arr.flags.writeable = False
        self._points = arr
        self.window = window

    @classmethod
    def empty(cls, window: Window) -> "PointPattern":
        return cls(np.empty((0, window.dim)), window, validate=False)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self.window.dim

    def __len__(self) -> int:
        return self._points.shape[0]

    def __iter__(self) -> Iterator[Point]:
        return (Point.from_array(row) for row in self._points)

    def _sorted(self) -> np.ndarray:
        if len(self) == 0:
            return self._points
        order = np.lexsort(self._points.T[::-1])
        return self._points[order]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointPattern):
            return NotImplemented
        return self.window == other.window and np.array_equal(self._sorted(), other._sorted())

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:  # pragma: no cover
        return f"PointPattern(n={len(self)}, window={self.window})"
