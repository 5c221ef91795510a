"""Exception types shared across the package.

Every numeric failure carries the originating module, the operation name and,
when meaningful, the position at which it occurred, so the CLI can emit a
machine-readable error object.
"""

from __future__ import annotations


class QshjeError(Exception):
    """Base class for all package errors."""

    def __init__(self, message, *, module=None, op=None, x=None):
        super().__init__(message)
        self.module = module
        self.op = op
        self.x = x

    def to_json_dict(self):
        return {
            "module": self.module,
            "op": self.op,
            "message": str(self),
            "x": self.x,
        }


class DomainError(QshjeError):
    """Input outside the mathematical domain of an operation."""


class ParameterError(QshjeError):
    """Invalid or degenerate parameter set (dependent combinations etc.)."""


class NumericError(QshjeError):
    """Numerical failure during evaluation (overflow, non-finite values)."""


class IntegrationQualityError(NumericError):
    """Integration accuracy below contract (e.g. Wronskian drift too large)."""


class SingularityError(NumericError):
    """Evaluation at or too close to a pole / vanishing derivative."""


class SearchError(NumericError):
    """Root or bracket search failed within the scanned window."""


class ConstructionError(NumericError):
    """A derived object (partner solution, field) could not be built."""


class ConversionError(ParameterError):
    """Parameter set has no representation in the requested form."""


class NormalizationError(ParameterError):
    """Pair normalization does not match the one an operation requires."""


class GridNarrowError(NumericError):
    """Grid too narrow for the requested accuracy (tail truncation)."""


class ConfigError(QshjeError):
    """Invalid CLI / scenario configuration."""
