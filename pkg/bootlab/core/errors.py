"""
Centralized Error Handling Module
Provides one exception hierarchy and one structured error envelope for the
library and the command-line front end.
"""

import logging
from typing import Any, Optional

from pydantic import BaseModel

logger = logging.getLogger(__name__)


class ErrorDetail(BaseModel):
    code: str
    message: str
    details: str


class ErrorResponse(BaseModel):
    """Standard error envelope printed by the CLI."""

    success: bool = False
    data: Optional[dict] = None
    error: ErrorDetail


class BootlabError(Exception):
    """Base exception with a machine code and a process exit status."""

    code = "INTERNAL_ERROR"
    exit_code = 1

    def __init__(self, error: str, detail: str):
        self.error = error
        self.detail = detail
        super().__init__(detail)


class BoundsError(BootlabError):
    code = "BOUNDS_ERROR"
    exit_code = 2


class DomainError(BootlabError):
    code = "DOMAIN_ERROR"
    exit_code = 2


class EmptyInputError(BootlabError):
    code = "EMPTY_INPUT"
    exit_code = 2


class ConvergenceError(BootlabError):
    """Quadrature could not reach the requested tolerance."""

    code = "CONVERGENCE_ERROR"
    exit_code = 3

    def __init__(self, error: str, detail: str, partial: Any = None):
        super().__init__(error, detail)
        self.partial = partial


class LemmaViolationError(BootlabError):
    """A deterministic lemma failed on a concrete instance. Always a bug."""

    code = "LEMMA_VIOLATION"
    exit_code = 70


# Common error factories
def bounds_error(detail: str) -> BoundsError:
    """Create an out-of-bounds error."""
    return BoundsError(error="Out of Bounds", detail=detail)


def domain_error(detail: str) -> DomainError:
    """Create a domain (precondition) error."""
    return DomainError(error="Domain Error", detail=detail)


def empty_input(detail: str = "Input set is empty") -> EmptyInputError:
    """Create an empty-input error."""
    return EmptyInputError(error="Empty Input", detail=detail)


def convergence_error(detail: str, partial: Any = None) -> ConvergenceError:
    """Create a convergence error carrying the best partial result."""
    return ConvergenceError(error="Convergence Failure", detail=detail, partial=partial)


def lemma_violation(lemma: str, detail: str) -> LemmaViolationError:
    """Create a lemma-violation error."""
    logger.error(f"[LEMMA VIOLATION] {lemma}: {detail}")
    return LemmaViolationError(error=f"Lemma Violated: {lemma}", detail=detail)


def error_payload(exc: Exception) -> ErrorResponse:
    """Render any exception as the structured error envelope."""
    if isinstance(exc, BootlabError):
        detail = ErrorDetail(code=exc.code, message=exc.error, details=exc.detail)
    else:
        logger.error(f"Unhandled exception: {exc}", exc_info=True)
        detail = ErrorDetail(
            code="INTERNAL_ERROR",
            message="Internal Error",
            details=f"{type(exc).__name__}: {exc}",
        )
    return ErrorResponse(error=detail)


def exit_code_for(exc: Exception) -> int:
    """Process exit status for an exception."""
    return exc.exit_code if isinstance(exc, BootlabError) else 1
