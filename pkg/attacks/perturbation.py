"""
Perturbation directions p for attacks of the form g_m = g_b + gamma * p.
"""

import numpy as np

from utils.errors import DegenerateInputError, InsufficientRowsError


def _rows(benign: np.ndarray, minimum: int = 1) -> np.ndarray:
    benign = np.atleast_2d(np.asarray(benign, dtype=np.float64))
    if benign.shape[0] < minimum:
        raise InsufficientRowsError(
            f"Need at least {minimum} visible benign row(s), got {benign.shape[0]}"
        )
    return benign


def perturbation_uv(benign: np.ndarray) -> np.ndarray:
    """Inverse unit vector: -g_b / ||g_b||."""
    mean = _rows(benign).mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise DegenerateInputError("Mean of visible benign updates is zero; uv is undefined")
    return -mean / norm


def perturbation_sgn(benign: np.ndarray) -> np.ndarray:
    """Inverse sign of the column mean; sign(0) = 0."""
    return -np.sign(_rows(benign).mean(axis=0))


def perturbation_std(benign: np.ndarray) -> np.ndarray:
    """Inverse column-wise population standard deviation."""
    return -_rows(benign, minimum=2).std(axis=0)


PERTURBATIONS = {
    "uv": perturbation_uv,
    "sgn": perturbation_sgn,
    "std": perturbation_std,
}


def make_perturbation(kind: str, benign: np.ndarray) -> np.ndarray:
    return PERTURBATIONS[kind](benign)
