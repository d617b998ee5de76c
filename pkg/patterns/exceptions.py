from __future__ import annotations


class PalmLabError(Exception):
    """Base class for every error raised by the palmlab apps."""


class InvalidGeometry(PalmLabError, ValueError):
    """A point, window or region violates its construction invariants."""


class WindowMismatch(PalmLabError):
    def __init__(self, left, right):
        super().__init__(f"Patterns live on different windows: {left} vs {right}")
        self.left = left
        self.right = right


class AtomNotFound(PalmLabError, LookupError):
    def __init__(self, point):
        super().__init__(f"No atom at {point} to remove")
        self.point = point


class OutOfWindow(PalmLabError, ValueError):
    def __init__(self, point, window):
        super().__init__(f"Point {point} lies outside window {window}")
        self.point = point
        self.window = window
