"""
Exception hierarchy for choi-grape

Every error raised by the numerics derives from ``ChoiGrapeError`` and,
where it makes sense, from the matching builtin so callers can catch
``ValueError`` or ``ZeroDivisionError`` without importing this module.
"""

import math
from typing import Optional


class ChoiGrapeError(Exception):
    """Base class for all choi-grape errors."""


class DimensionError(ChoiGrapeError, ValueError):
    """Array shapes are non-square, mismatched or not a perfect square."""


class ArgumentError(ChoiGrapeError, ValueError):
    """Invalid call arguments such as an empty pixel list."""


class GridMismatchError(ArgumentError):
    """A replayed pulse does not match the configured time grid."""


class ValidityError(ChoiGrapeError, ValueError):
    """Input outside the physical validity of a model or channel."""


class WellDisappearedError(ValidityError):
    """The shallow potential well does not exist at the requested bias."""

    def __init__(self, phi_b: float, message: Optional[str] = None):
        self.phi_b = phi_b
        super().__init__(
            message
            or f"No shallow well at phi_b = {phi_b:.6f} rad ({phi_b / (2 * math.pi):.5f}*2pi)"
        )


class NumericError(ChoiGrapeError, ArithmeticError):
    """Non-finite values encountered in a numerical routine."""


class OptimizationAbort(NumericError):
    """The optimizer stopped on a non-finite objective or gradient."""

    def __init__(self, message: str, iteration: int = 0, diagnostic: Optional[dict] = None):
        self.iteration = iteration
        self.diagnostic = diagnostic or {}
        super().__init__(f"{message} (iteration {iteration})")


class ZeroTargetError(ChoiGrapeError, ZeroDivisionError):
    """The target Choi matrix has zero Frobenius norm."""


class ResolutionError(ChoiGrapeError):
    """DVR energies change by more than the tolerance on grid refinement."""


class FitQualityError(ChoiGrapeError):
    """A fitted model curve misses its source data by more than the threshold."""

    def __init__(self, curve: str, residual: float, threshold: float):
        self.curve = curve
        self.residual = residual
        self.threshold = threshold
        super().__init__(
            f"Fit of {curve} has residual {residual:.3e} above threshold {threshold:.1e}"
        )


class ConfigurationError(ChoiGrapeError):
    """The run configuration cannot produce a well-posed problem."""
