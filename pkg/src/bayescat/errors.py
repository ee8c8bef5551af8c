"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "BayescatError",
    "DomainError",
    "InvalidPriorError",
    "UnsupportedEstimatorError",
    "BankError",
    "BankExhaustedError",
    "ProtocolError",
    "ConfigError",
]


class BayescatError(Exception):
    """Base class for all package-specific errors."""


class DomainError(BayescatError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class InvalidPriorError(BayescatError, ValueError):
    """A prior specification cannot produce a valid density on the grid."""


class UnsupportedEstimatorError(BayescatError, ValueError):
    """The requested point estimator is not available for this posterior."""


class BankError(BayescatError, ValueError):
    """An item bank or bank file is malformed."""


class BankExhaustedError(BayescatError, RuntimeError):
    """No available item remains to administer."""


class ProtocolError(BayescatError, RuntimeError):
    """A session operation was called in the wrong phase or with a stale item."""


class ConfigError(BayescatError, ValueError):
    """A configuration object or file is invalid."""
