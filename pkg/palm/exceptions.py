from __future__ import annotations

from patterns.exceptions import PalmLabError


class DegenerateConditioning(PalmLabError):
    """Two-point conditioning at (x, y) is undefined: coincident points or zero product density."""

    def __init__(self, x, y, detail: str):
        super().__init__(f"Cannot condition on ({x}, {y}): {detail}")
        self.x = x
        self.y = y
