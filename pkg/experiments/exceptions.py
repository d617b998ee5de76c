from __future__ import annotations

from patterns.exceptions import PalmLabError


class ConfigError(PalmLabError):
    """Config text could not be turned into an ExperimentConfig."""

    @property
    def messages(self) -> list[str]:
        return [str(self)]


class ConfigParseError(ConfigError):
    pass


class ConfigValidationError(ConfigError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)

    @property
    def messages(self) -> list[str]:
        return list(self.errors)
