"""
Exception-to-exit-code mapping for the command line, with standardized error payloads.
"""

import json
import logging
import sys
from typing import Optional, TextIO

from pydantic import ValidationError

from models.responses import Diagnostic, ErrorDetail, ErrorResponse
from utils.errors import ConfigurationError, FLSimError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def config_error_response(exc: ConfigurationError) -> ErrorResponse:
    """Configuration and validation problems, with per-key diagnostics when available."""
    raw = (exc.details or {}).get("diagnostics", [])
    return ErrorResponse(
        exit_code=EXIT_CONFIG,
        error=ErrorDetail(
            code=exc.code,
            message=exc.message,
            diagnostics=[Diagnostic(**d) for d in raw],
            details={k: v for k, v in (exc.details or {}).items() if k != "diagnostics"} or None,
        ),
    )


def validation_error_response(exc: ValidationError) -> ErrorResponse:
    diagnostics = [
        Diagnostic(key=".".join(str(x) for x in error["loc"]), message=error["msg"])
        for error in exc.errors()
    ]
    return ErrorResponse(
        exit_code=EXIT_CONFIG,
        error=ErrorDetail(
            code="VALIDATION_ERROR",
            message="Validation failed",
            diagnostics=diagnostics,
        ),
    )


def simulation_error_response(exc: FLSimError) -> ErrorResponse:
    return ErrorResponse(
        exit_code=EXIT_RUNTIME,
        error=ErrorDetail(code=exc.code, message=exc.message, details=exc.details),
    )


def generic_error_response(exc: Exception) -> ErrorResponse:
    """Handle unexpected exceptions with standardized format."""
    logger.error(f"Unexpected error: {str(exc)}", exc_info=True)
    return ErrorResponse(
        exit_code=EXIT_RUNTIME,
        error=ErrorDetail(
            code="INTERNAL_ERROR",
            message="An unexpected error occurred",
            details={"error": str(exc)} if logger.isEnabledFor(logging.DEBUG) else None,
        ),
    )


def error_response(exc: Exception) -> ErrorResponse:
    if isinstance(exc, ConfigurationError):
        return config_error_response(exc)
    if isinstance(exc, ValidationError):
        return validation_error_response(exc)
    if isinstance(exc, FLSimError):
        logger.error(f"{exc.code}: {exc.message}", exc_info=True)
        return simulation_error_response(exc)
    return generic_error_response(exc)


def handle_exception(exc: Exception, stream: Optional[TextIO] = None) -> int:
    """Write the error payload as one JSON line to stderr and return the exit code."""
    response = error_response(exc)
    stream = stream or sys.stderr
    stream.write(json.dumps(response.model_dump(mode="json"), sort_keys=True) + "\n")
    return response.exit_code
