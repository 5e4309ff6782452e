"""
Error hierarchy shared by the simulator, the CLI and the server.

The CLI maps these onto exit codes: validation 1, numerical 2, config/budget 3.
"""


class TtnError(Exception):
    """Base class for all simulator errors."""


class ValidationError(TtnError, ValueError):
    """Invalid input or a violated structural invariant."""


class NotCanonicalError(ValidationError):
    """An operation that needs the canonical form received a state without it."""


class NumericalError(TtnError, ArithmeticError):
    """Non-finite data, failed decompositions, divergence or corrupted weights."""


class BudgetExceededError(TtnError):
    """A dense representation would exceed the configured size budget."""


class ConfigError(TtnError, ValueError):
    """A run configuration cannot be used."""
