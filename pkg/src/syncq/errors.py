"""Exception types shared across the package.

ConfigError marks bad user input (CLI exit code 2); the NumericError family
marks well-formed requests that cannot be computed (CLI exit code 3).
"""
from __future__ import annotations

__all__ = [
    "ConfigError", "NumericError", "DegenerateTruncationError",
    "InfiniteMomentError", "MGFDomainError", "TreeBudgetError",
    "VacuousBoundError", "NoCramerRootError",
]


class ConfigError(ValueError):
    """Invalid configuration or inconsistent parameters."""


class NumericError(RuntimeError):
    """A numeric procedure cannot produce a result for these inputs."""


class DegenerateTruncationError(NumericError):
    """Conditioning event N <= m has (numerically) zero probability."""


class InfiniteMomentError(NumericError):
    """The requested moment diverges."""


class MGFDomainError(NumericError):
    """Exponential moment requested outside the finiteness domain."""


class TreeBudgetError(NumericError):
    """Expected node count of an exact tree expansion exceeds the budget."""


class VacuousBoundError(NumericError):
    """The geometric bound constant is >= 1, so the bound says nothing."""


class NoCramerRootError(NumericError):
    """Unstable parameters: the tail-exponent equation has no root."""
