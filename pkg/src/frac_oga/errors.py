"""Exception types shared across the solver, config layer and CLI."""

from __future__ import annotations


class FracOgaError(Exception):
    """Base class for all frac-oga errors."""


class ConfigError(FracOgaError, ValueError):
    """A configuration field is missing, malformed or out of range."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class InputError(FracOgaError, ValueError):
    """An operation received arguments of the wrong shape or size."""


class NumericalError(FracOgaError, RuntimeError):
    """A linear-algebra step could not produce a trustworthy result."""


class SingularOperatorError(NumericalError):
    pass


class DegenerateDictionaryError(NumericalError):
    pass


class Stagnation(FracOgaError):
    """Every dictionary candidate scores exactly zero against the residual."""
