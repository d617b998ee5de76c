from __future__ import annotations

from patterns.exceptions import PalmLabError


class InvalidModel(PalmLabError, ValueError):
    """Model parameters are inconsistent (negative rate, violated thinning bound, ...)."""


class NoAnalyticPalm(PalmLabError):
    def __init__(self, model, what: str = "Palm sampler"):
        super().__init__(f"{model!r} has no analytic {what}")
        self.model = model


class NoProductDensity(PalmLabError):
    def __init__(self, model):
        super().__init__(f"{model!r} exposes no second product density")
        self.model = model


class ZeroIntensityAtPoint(PalmLabError):
    """The Palm distribution at x is undefined because the intensity vanishes there."""

    def __init__(self, point, detail: str = ""):
        message = f"Intensity is zero at {point}; Palm distribution undefined"
        super().__init__(f"{message} ({detail})" if detail else message)
        self.point = point
