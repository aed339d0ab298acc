"""
File validation utilities for dataset ingestion.
"""

import logging
import os

from utils.errors import IngestionError

logger = logging.getLogger(__name__)


def validate_file_exists(file_path: str) -> bool:
    """
    Check that the path exists and is a regular file.

    Raises:
        IngestionError: If the file is missing
    """
    if not os.path.isfile(file_path):
        raise IngestionError("File does not exist", offset=0, path=file_path)
    return True


def validate_file_size(file_path: str, min_size_bytes: int) -> int:
    """
    Validate that a file holds at least `min_size_bytes` (e.g. a full header).

    Returns:
        int: The file size in bytes

    Raises:
        IngestionError: If the file is shorter, with the offset where data ends
    """
    file_size = os.path.getsize(file_path)
    if file_size < min_size_bytes:
        raise IngestionError(
            f"File truncated: {file_size} bytes, header needs {min_size_bytes}",
            offset=file_size,
            path=file_path,
        )
    return file_size


def validate_ingest_file(file_path: str, min_size_bytes: int) -> int:
    """
    Comprehensive validation before decoding a binary dataset file.

    Returns:
        int: The file size in bytes
    """
    validate_file_exists(file_path)
    size = validate_file_size(file_path, min_size_bytes)
    logger.debug(f"File validation successful for {file_path} ({size} bytes)")
    return size
