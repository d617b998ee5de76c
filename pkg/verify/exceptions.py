from __future__ import annotations

from patterns.exceptions import PalmLabError


class ZeroTotalWeight(PalmLabError):
    """No replicate put a point in the conditioning ball(s): raise the rate, epsilon or replicate count."""


class EmptyInput(PalmLabError, ValueError):
    """A statistical comparison received an empty sample or pmf."""
