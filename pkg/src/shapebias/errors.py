"""Exception hierarchy shared by all shapebias modules."""

from __future__ import annotations


class ShapeBiasError(Exception):
    """Base class for all shapebias errors."""


class ContractViolationError(ShapeBiasError):
    """Mismatched spaces, bases, or argument lengths."""


class DomainError(ShapeBiasError, ValueError):
    """Numerically invalid input (non-finite, out of range, off-manifold)."""


class CutLocusError(DomainError):
    """Riemannian log requested at or beyond the cut locus (antipodal pair)."""


class DegenerateOrbitError(ShapeBiasError):
    """Registration against a template fixed by the whole group (singular orbit)."""


class ConvergenceError(ShapeBiasError):
    """Iteration failed to converge; carries the last iterate."""

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class DegenerateSignalError(ShapeBiasError):
    """Noise correction would leave a nonpositive signal."""


class QuadratureError(ShapeBiasError):
    """Numerical integration did not reach the requested accuracy."""
