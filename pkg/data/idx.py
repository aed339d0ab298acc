"""
Reader for the IDX binary format used by MNIST.

Layout (big endian): u32 magic, one u32 per dimension, then the u8 payload row-major.
Labels: magic 0x00000801, one dimension (count). Images: magic 0x00000803, three
dimensions (count, rows, cols).
"""

import logging
import struct
from typing import Optional

import numpy as np

from data.dataset import Dataset
from utils.constant import IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC
from utils.errors import IngestionError
from utils.file_validation import validate_ingest_file

logger = logging.getLogger(__name__)


def _read_u32(buf: bytes, offset: int, path: str) -> int:
    if offset + 4 > len(buf):
        raise IngestionError("Truncated header", offset=offset, path=path)
    return struct.unpack_from(">I", buf, offset)[0]


def read_idx(path: str, expected_magic: int, n_dims: int) -> np.ndarray:
    """Decode one IDX file into a uint8 array of shape (count, *rest)."""
    header = 4 * (1 + n_dims)
    validate_ingest_file(path, header)
    with open(path, "rb") as f:
        buf = f.read()

    magic = _read_u32(buf, 0, path)
    if magic != expected_magic:
        raise IngestionError(
            f"Bad magic number {magic}, expected {expected_magic}", offset=0, path=path
        )
    dims = [_read_u32(buf, 4 * (i + 1), path) for i in range(n_dims)]
    payload = int(np.prod(dims, dtype=np.int64))
    available = len(buf) - header
    if available < payload:
        raise IngestionError(
            f"Truncated payload: {available} of {payload} bytes present",
            offset=len(buf),
            path=path,
        )
    if available > payload:
        logger.warning(f"{path}: {available - payload} trailing bytes ignored")
    return np.frombuffer(buf, dtype=np.uint8, count=payload, offset=header).reshape(dims)


def load_idx(images_path: str, labels_path: str, n_classes: Optional[int] = None) -> Dataset:
    """
    Load an image/label IDX pair as a Dataset with pixels scaled to [0, 1].

    Args:
        images_path: IDX3 image file
        labels_path: IDX1 label file
        n_classes: class count; defaults to max(label) + 1 (at least 10 for MNIST-like data)

    Raises:
        IngestionError: bad magic, truncated file, or count mismatch
    """
    images = read_idx(images_path, IDX_IMAGE_MAGIC, 3)
    labels = read_idx(labels_path, IDX_LABEL_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise IngestionError(
            f"Image count {images.shape[0]} does not match label count {labels.shape[0]}",
            offset=4,
            path=labels_path,
        )
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    label_vec = labels.astype(np.int64)
    if n_classes is None:
        n_classes = max(10, int(label_vec.max()) + 1) if label_vec.size else 10
    logger.info(f"Loaded {features.shape[0]} samples of dimension {features.shape[1]} from {images_path}")
    return Dataset(features, label_vec, n_classes)
