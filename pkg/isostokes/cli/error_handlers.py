# isostokes/cli/error_handlers.py
from __future__ import annotations
from typing import Optional, Tuple
import logging

from pydantic import ValidationError

from ..core.errors import (
    ConvergenceError,
    InputError,
    IsoStokesError,
    SchemaViolation,
    ToleranceError,
)
from ..core.models import ReportStatus
from .schemas import ErrorReport, schema_violation

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_SCHEMA = 2
EXIT_TOLERANCE = 3
EXIT_INPUT = 4
EXIT_CONVERGENCE = 5

_STATUS_BY_EXIT = {
    EXIT_SCHEMA: ReportStatus.SCHEMA_ERROR,
    EXIT_TOLERANCE: ReportStatus.TOLERANCE_FAILED,
    EXIT_INPUT: ReportStatus.INPUT_REJECTED,
    EXIT_CONVERGENCE: ReportStatus.NOT_CONVERGED,
}

def status_for(exit_code: int) -> ReportStatus:
    return _STATUS_BY_EXIT.get(exit_code, ReportStatus.TOLERANCE_FAILED)

def handle_exception(exc: BaseException, job_id: Optional[str] = None) -> Tuple[int, ErrorReport]:
    """
    Map an exception to its exit code and a machine-readable error object.

    Library errors carry their own exit code and details; pydantic errors
    are schema violations; anything else is an internal error (exit 1).
    """
    if isinstance(exc, ValidationError):
        exc = schema_violation(exc)

    if isinstance(exc, IsoStokesError):
        details = dict(exc.details)
        details.setdefault("reason", exc.message)
        details.setdefault("suggestion", exc.suggestion)
        if isinstance(exc, SchemaViolation):
            logger.warning(f"Schema violation at {exc.field_path}: {exc.message}")
        elif isinstance(exc, InputError):
            logger.warning(f"Input rejected ({type(exc).__name__}): {exc.message}")
        elif isinstance(exc, (ToleranceError, ConvergenceError)):
            logger.error(f"Numerical failure ({type(exc).__name__}): {exc.message}")
        else:
            logger.error(f"{type(exc).__name__}: {exc.message}")
        report = ErrorReport(
            error=type(exc).__name__,
            message=exc.message,
            details=details,
            job_id=job_id,
        )
        return exc.exit_code, report

    logger.error(f"Unexpected error: {exc}", exc_info=exc)
    report = ErrorReport(
        error="internal_error",
        message="An unexpected error occurred",
        details={"reason": str(exc), "error_type": type(exc).__name__},
        job_id=job_id,
    )
    return EXIT_INTERNAL, report
