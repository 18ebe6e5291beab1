"""Exception hierarchy.

The CLI maps :class:`ConfigurationError` (and its subclasses) to exit code 2.
"""


class SaarbError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SaarbError, ValueError):
    """Invalid parameters, missing inputs or schema violations."""


class DomainError(SaarbError, ValueError):
    """An argument lies outside the range where a formula is defined."""


class DivergenceError(SaarbError, ArithmeticError):
    """A moment or integral is infinite, or a quadrature failed to converge."""


class UnsupportedProblemError(ConfigurationError):
    """No oracle is available for the requested population quantity."""
