"""
CLI payload models: oracle results and error diagnostics.
"""

from typing import Any, Optional

from pydantic import BaseModel, Field


class OracleResponse(BaseModel):
    """Canonical output of an `oracle` subcommand."""

    oracle: str
    result: Any


class Diagnostic(BaseModel):
    """One configuration problem, tied to a config key and, when known, its line."""

    key: str
    message: str
    line: Optional[int] = None


class ErrorDetail(BaseModel):
    code: str
    message: str
    diagnostics: list[Diagnostic] = Field(default_factory=list)
    details: Optional[dict[str, Any]] = None


class ErrorResponse(BaseModel):
    success: bool = False
    exit_code: int
    error: ErrorDetail
