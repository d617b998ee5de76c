"""Value grammar of config options.

Whitespace-separated tokens, coordinates in window order::

    point      0.5 0.5
    window     0 0 1 1               (lower corner, then upper corner)
    region     window | box X0 Y0 X1 Y1 | ball CX CY R
    rate       30 | linear A B1 B2
    function   const C | linear A B1 B2 | indicator REGION [VALUE]
    statistic  count | count REGION
    functional const C | count_at_most K [REGION]
    names      phi1 phi2

Every parser raises ValueError with a readable message.
"""
from __future__ import annotations

from patterns.exceptions import InvalidGeometry
from patterns.geometry import Ball, Box, Point, Region, Window
from processes.intensities import LinearIntensity
from verify.functions import Constant, ConstantFunctional, CountAtMost, Indicator, RegionCount, TotalCount


def parse_floats(text: str, what: str = "value") -> list[float]:
    try:
        return [float(tok) for tok in text.split()]
    except ValueError:
        raise ValueError(f"Expected numbers for {what}, got {text!r}") from None


def _dim(window: Window | None) -> int:
    return window.dim if window is not None else 2


def parse_point(text: str, window: Window | None = None) -> Point:
    coords = parse_floats(text, "point")
    if len(coords) != _dim(window):
        raise ValueError(f"Point {text!r} needs {_dim(window)} coordinates")
    try:
        return Point(tuple(coords))
    except InvalidGeometry as exc:
        raise ValueError(str(exc)) from None


def parse_window(text: str, window: Window | None = None) -> Window:
    values = parse_floats(text, "window")
    if len(values) not in (2, 4, 6):
        raise ValueError(f"Window needs 2, 4 or 6 numbers (lower corner then upper corner), got {text!r}")
    half = len(values) // 2
    try:
        return Window(Point(tuple(values[:half])), Point(tuple(values[half:])))
    except InvalidGeometry as exc:
        raise ValueError(str(exc)) from None


def _region(tokens: list[str], window: Window | None) -> tuple[Region, list[str]]:
    if not tokens:
        raise ValueError("Missing region")
    kind, rest = tokens[0], tokens[1:]
    d = _dim(window)
    try:
        if kind == "window":
            if window is None:
                raise ValueError("'window' region needs a configured window")
            return window, rest
        if kind == "box":
            coords = parse_floats(" ".join(rest[: 2 * d]), "box")
            if len(coords) != 2 * d:
                raise ValueError(f"box needs {2 * d} numbers")
            return Box(Point(tuple(coords[:d])), Point(tuple(coords[d:]))), rest[2 * d:]
        if kind == "ball":
            coords = parse_floats(" ".join(rest[: d + 1]), "ball")
            if len(coords) != d + 1:
                raise ValueError(f"ball needs {d + 1} numbers")
            return Ball(Point(tuple(coords[:d])), coords[d]), rest[d + 1:]
    except InvalidGeometry as exc:
        raise ValueError(str(exc)) from None
    raise ValueError(f"Unknown region kind {kind!r} (expected window, box or ball)")


def parse_region(text: str, window: Window | None = None) -> Region:
    region, rest = _region(text.split(), window)
    if rest:
        raise ValueError(f"Unexpected tokens after region: {' '.join(rest)!r}")
    return region


def parse_linear(text: str, window: Window | None = None) -> LinearIntensity:
    tokens = text.split()
    if not tokens or tokens[0] != "linear":
        raise ValueError(f"Expected 'linear A B1 ...', got {text!r}")
    values = parse_floats(" ".join(tokens[1:]), "linear")
    if not values or len(values) > _dim(window) + 1:
        raise ValueError(f"linear takes an intercept and up to {_dim(window)} slopes")
    return LinearIntensity(values[0], tuple(values[1:]))


def parse_rate(text: str, window: Window | None = None) -> float | LinearIntensity:
    if text.split()[:1] == ["linear"]:
        return parse_linear(text, window)
    values = parse_floats(text, "rate")
    if len(values) != 1:
        raise ValueError(f"Rate must be one number or 'linear ...', got {text!r}")
    return values[0]


def parse_point_function(text: str, window: Window | None = None):
    tokens = text.split()
    if not tokens:
        raise ValueError("Missing function")
    if tokens[0] == "const":
        values = parse_floats(" ".join(tokens[1:]), "const")
        if len(values) != 1:
            raise ValueError("const takes one number")
        return Constant(values[0])
    if tokens[0] == "linear":
        return parse_linear(text, window)
    if tokens[0] == "indicator":
        region, rest = _region(tokens[1:], window)
        value = parse_floats(" ".join(rest), "indicator value") or [1.0]
        if len(value) != 1:
            raise ValueError("indicator takes a region and at most one value")
        return Indicator(region, value[0])
    raise ValueError(f"Unknown function {tokens[0]!r} (expected const, linear or indicator)")


def parse_statistic(text: str, window: Window | None = None):
    tokens = text.split()
    if not tokens or tokens[0] != "count":
        raise ValueError(f"Statistic must be 'count' or 'count REGION', got {text!r}")
    if len(tokens) == 1:
        return TotalCount()
    return RegionCount(parse_region(" ".join(tokens[1:]), window))


def parse_functional(text: str, window: Window | None = None):
    tokens = text.split()
    if not tokens:
        raise ValueError("Missing functional")
    if tokens[0] == "const":
        values = parse_floats(" ".join(tokens[1:]), "const")
        if len(values) != 1:
            raise ValueError("const takes one number")
        return ConstantFunctional(values[0])
    if tokens[0] == "count_at_most":
        if len(tokens) < 2 or not tokens[1].isdigit():
            raise ValueError("count_at_most takes a non-negative integer threshold")
        region = parse_region(" ".join(tokens[2:]), window) if len(tokens) > 2 else None
        return CountAtMost(int(tokens[1]), region)
    raise ValueError(f"Unknown functional {tokens[0]!r} (expected const or count_at_most)")


def parse_names(text: str, window: Window | None = None) -> tuple[str, ...]:
    names = tuple(text.split())
    if not names:
        raise ValueError("Expected at least one name")
    return names


def parse_float_list(text: str, window: Window | None = None) -> tuple[float, ...]:
    values = parse_floats(text)
    if not values:
        raise ValueError("Expected at least one number")
    return tuple(values)
