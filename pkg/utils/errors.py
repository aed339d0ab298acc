"""
Exception hierarchy shared by every simulator package.
"""

from typing import Any, Optional


class FLSimError(Exception):
    """Base class for simulator errors."""

    code = "FLSIM_ERROR"

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details


class ConfigurationError(FLSimError):
    """Invalid or inconsistent configuration (dimensions, counts, hyper-parameters)."""

    code = "CONFIG_ERROR"


class ConfigValidationError(ConfigurationError):
    """Experiment config failed validation; details map dotted keys to diagnostics."""

    code = "CONFIG_VALIDATION_ERROR"


class InputError(FLSimError):
    """Caller passed data that violates an operation's precondition."""

    code = "INPUT_ERROR"


class InsufficientRowsError(InputError):
    code = "INSUFFICIENT_ROWS"


class EmptyClientDataError(InputError):
    code = "EMPTY_CLIENT"


class IngestionError(FLSimError):
    """IDX file could not be decoded."""

    code = "INGESTION_ERROR"

    def __init__(self, message: str, offset: int, path: Optional[str] = None):
        super().__init__(
            f"{message} (offset {offset})", details={"offset": offset, "path": path}
        )
        self.offset = offset
        self.path = path


class AggregationError(FLSimError):
    code = "AGGREGATION_ERROR"


class DegenerateInputError(FLSimError):
    """Input is well-formed but makes the operation undefined (zero norm, no negatives)."""

    code = "DEGENERATE_INPUT"
