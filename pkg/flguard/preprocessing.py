"""
Update preprocessing: feature selection down to the contrastive width, then MaxAbs scaling.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from utils.constant import FEATURE_DIM
from utils.errors import ConfigurationError, InsufficientRowsError


@dataclass(frozen=True)
class FeatureSelector:
    kind: Literal["low_variance", "random"]
    indices: np.ndarray  # strictly increasing coordinates < source_dim
    source_dim: int

    def apply(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(rows)
        if rows.shape[1] != self.source_dim:
            raise ConfigurationError(
                f"Rows have dimension {rows.shape[1]}, selector was fitted on {self.source_dim}"
            )
        return rows[:, self.indices]

    @property
    def width(self) -> int:
        return int(self.indices.size)


def fit_low_variance_selector(
    g_train: np.ndarray, target: int = FEATURE_DIM, min_dim: int = 2
) -> FeatureSelector:
    """Keep the `target` highest-variance columns (ties go to the lower index)."""
    g_train = np.atleast_2d(np.asarray(g_train, dtype=np.float64))
    if g_train.shape[0] < 2:
        raise InsufficientRowsError("Low-variance selection needs at least 2 rows")
    d = g_train.shape[1]
    if d < min_dim:
        raise ConfigurationError(f"Update dimension {d} is below the PCA component count {min_dim}")
    if d <= target:
        return FeatureSelector("low_variance", np.arange(d), d)
    variance = g_train.var(axis=0)
    keep = np.argsort(-variance, kind="stable")[:target]
    return FeatureSelector("low_variance", np.sort(keep), d)


def fit_random_selector(
    d: int, rng: np.random.Generator, target: int = FEATURE_DIM
) -> FeatureSelector:
    """`target` distinct coordinates drawn uniformly without replacement."""
    if d < 1:
        raise ConfigurationError("Update dimension must be >= 1")
    if d <= target:
        return FeatureSelector("random", np.arange(d), d)
    return FeatureSelector("random", np.sort(rng.choice(d, size=target, replace=False)), d)


@dataclass(frozen=True)
class MaxAbsScaler:
    max_abs: np.ndarray  # zero entries mark features that map to 0

    def transform(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        out = np.zeros_like(rows)
        np.divide(rows, self.max_abs, out=out, where=self.max_abs > 0)
        return out


def fit_scaler(rows: np.ndarray) -> MaxAbsScaler:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[0] < 1:
        raise InsufficientRowsError("Scaler needs at least one row")
    return MaxAbsScaler(np.abs(rows).max(axis=0))


def apply_scaler(scaler: MaxAbsScaler, rows: np.ndarray) -> np.ndarray:
    """Divide by the fitted max-abs; no clamping, so unseen rows may exceed [-1, 1]."""
    return scaler.transform(rows)


@dataclass(frozen=True)
class Scaler:
    """Fitted scalers for the low-variance and random feature sets."""

    lv: MaxAbsScaler
    rd: MaxAbsScaler
