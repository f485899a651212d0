# isostokes/core/errors.py
from __future__ import annotations
from typing import Any, Dict, Optional

class IsoStokesError(Exception):
    """
    Base exception for isostokes numerical errors.

    Every error carries a ``details`` dictionary that the CLI copies into the
    machine-readable error report, and a class-level exit code.
    """

    exit_code: int = 1
    suggestion: str = "Check the input data and numerical settings"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": self.__class__.__name__,
            "message": self.message,
            "details": dict(self.details),
        }

# ---------------------------------------------------------------------------
# Input rejections (exit 4)
# ---------------------------------------------------------------------------

class InputError(IsoStokesError):
    """Raised when inputs violate a precondition (degenerate or malformed data)."""
    exit_code = 4
    suggestion = "Inputs are degenerate or outside the supported domain"

class NonHermitianInput(InputError):
    """Matrix fails the Hermiticity tolerance."""
    pass

class IndexOutOfRange(InputError):
    pass

class MismatchedSelection(InputError):
    pass

class NonPositiveBase(InputError):
    pass

class NonPositiveRatio(InputError):
    """A zone conjugator ratio is not strictly positive."""
    pass

class ZeroArgument(InputError):
    pass

class PoleArgument(InputError):
    """log_gamma evaluated at a nonpositive integer."""
    pass

class NonzeroDiagonal(InputError):
    pass

class DegenerateU(InputError):
    """Two coordinates of u are closer than the gap floor."""
    suggestion = "Separate the coordinates of u or lower numerics.gap_floor"

class DegenerateSpectrum(InputError):
    """A Gelfand-Tsetlin level has (nearly) repeated eigenvalues."""
    suggestion = "The closed form needs simple spectra on every leading submatrix"

    def __init__(self, message: str, level: int, indices: tuple[int, int], **details: Any):
        super().__init__(message, level=level, indices=list(indices), **details)
        self.level = level
        self.indices = indices

class WrongDimension(InputError):
    pass

class NoZeroEigenvalue(InputError):
    """Matrix is outside the PVI normalization (no zero eigenvalue)."""
    pass

class PathCrossesCut(InputError):
    pass

class AnchorTooClose(InputError):
    pass

class OverflowRisk(InputError):
    """Matrix norm exceeds the exponential cap."""
    pass

# ---------------------------------------------------------------------------
# Tolerance failures (exit 3)
# ---------------------------------------------------------------------------

class ToleranceError(IsoStokesError):
    """Raised when a computation cannot meet its accuracy contract."""
    exit_code = 3
    suggestion = "Tighten integrator tolerances or increase the series order"

class ToleranceNotMet(ToleranceError):
    pass

class StepSizeUnderflow(ToleranceError):
    """Adaptive step fell below the floor; ``t`` locates the failure on the path."""
    suggestion = "The path approaches a pole of the solution or a collision of coordinates"

    def __init__(self, message: str, t: float, **details: Any):
        super().__init__(message, t=t, **details)
        self.t = t

class TriangularityViolation(ToleranceError):
    suggestion = "Increase stokes.series_order or tighten stokes.tol"

class ConditioningFailure(ToleranceError):
    pass

# ---------------------------------------------------------------------------
# Iteration failures (exit 5)
# ---------------------------------------------------------------------------

class ConvergenceError(IsoStokesError):
    """Raised when an iterative procedure fails to converge."""
    exit_code = 5
    suggestion = "Increase the iteration cap or start closer to the solution"

class ConvergenceFailure(ConvergenceError):
    pass

class FixedPointDivergence(ConvergenceError):
    """Zone extraction did not settle; the point is not deep enough in the zone."""
    suggestion = "Increase rho so the point lies deeper in the asymptotic zone"

class NonConvergence(ConvergenceError):
    """Least-squares inversion stopped above target; best iterate attached."""

    def __init__(self, message: str, best: Optional[Any] = None, residual: Optional[float] = None, **details: Any):
        super().__init__(message, residual=residual, best=best, **details)
        self.best = best
        self.residual = residual

# ---------------------------------------------------------------------------
# Job configuration (exit 2)
# ---------------------------------------------------------------------------

class SchemaViolation(IsoStokesError):
    """Job configuration failed validation."""
    exit_code = 2
    suggestion = "Fix the job configuration; see --print-schema"

    def __init__(self, field_path: str, message: str, **details: Any):
        super().__init__(f"{field_path}: {message}", field_path=field_path, **details)
        self.field_path = field_path
