"""Exception taxonomy shared across the toolkit."""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all toolkit failures."""


class DomainError(ToolkitError):
    """Input outside the documented domain of an operation."""


class RangeError(ToolkitError):
    """Result not representable in the floating range (caller must rescale)."""


class ConvergenceError(ToolkitError):
    """Adaptive refinement hit its depth limit without meeting tolerance.

    Carries the last two estimates so the caller can judge how far apart
    they still were.
    """

    def __init__(self, message: str, last: complex, previous: complex):
        super().__init__(f"{message} (last={last!r}, previous={previous!r})")
        self.last = last
        self.previous = previous


class DegenerateDenominatorError(ToolkitError):
    """A ratio check hit a denominator below the absolute floor."""


class StabilityError(ToolkitError):
    """A time step violates the stability limit of the integrator."""


class ConfigError(ToolkitError):
    """Malformed or inconsistent experiment configuration."""
