"""
Byzantine-robust aggregation rules over an update matrix (one row per client).

Vector-wise rules return the indices of the rows they kept alongside the aggregate, so the
caller can score filtering quality; indices refer to row positions in `updates`.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from utils.errors import AggregationError, ConfigurationError, DegenerateInputError

logger = logging.getLogger(__name__)

POWER_ITERATIONS = 100
POWER_TOLERANCE = 1e-10


@dataclass(frozen=True)
class Selection:
    vector: np.ndarray
    selected: tuple[int, ...]


def _matrix(updates: np.ndarray) -> np.ndarray:
    updates = np.atleast_2d(np.asarray(updates, dtype=np.float64))
    if updates.shape[0] == 0:
        raise AggregationError("No updates to aggregate")
    return updates


def fed_avg(updates: np.ndarray) -> np.ndarray:
    return _matrix(updates).mean(axis=0)


def trimmed_mean(updates: np.ndarray, m: int) -> np.ndarray:
    """Per coordinate, drop the m largest and m smallest values and average the rest."""
    updates = _matrix(updates)
    n = updates.shape[0]
    if n <= 2 * m:
        raise ConfigurationError(f"trimmed_mean needs N > 2m (N={n}, m={m})")
    ordered = np.sort(updates, axis=0)
    return ordered[m : n - m].mean(axis=0)


def _squared_distances(updates: np.ndarray) -> np.ndarray:
    return cdist(updates, updates, metric="sqeuclidean")


def krum_scores(dist: np.ndarray, candidates: list[int], n_neighbors: int) -> np.ndarray:
    """Sum of squared distances from each candidate to its n_neighbors nearest other candidates."""
    sub = dist[np.ix_(candidates, candidates)]
    scores = np.empty(len(candidates))
    for pos in range(len(candidates)):
        others = np.delete(sub[pos], pos)
        scores[pos] = np.sort(others)[:n_neighbors].sum()
    return scores


def krum_select(updates: np.ndarray, M: int, count: int) -> tuple[int, ...]:
    """Iteratively move the lowest-score remaining row into the selection.

    Scores are recomputed over the remaining rows each iteration with
    max(1, n_remaining - M - 2) neighbours; ties go to the lower row index.
    """
    updates = _matrix(updates)
    dist = _squared_distances(updates)
    remaining = list(range(updates.shape[0]))
    selected = []
    while len(selected) < count:
        if len(remaining) == 1:
            selected.append(remaining.pop())
            continue
        n_neighbors = max(1, len(remaining) - M - 2)
        scores = krum_scores(dist, remaining, n_neighbors)
        best = remaining[int(np.argmin(scores))]
        selected.append(best)
        remaining.remove(best)
    return tuple(sorted(selected))


def multi_krum_count(n: int, M: int) -> int:
    """Largest c with n - c > 2M + 2."""
    return n - 2 * M - 3


def multi_krum(updates: np.ndarray, M: int, c: Optional[int] = None) -> Selection:
    updates = _matrix(updates)
    n = updates.shape[0]
    c = multi_krum_count(n, M) if c is None else c
    if n - M - 2 < 1 or c < 1:
        raise ConfigurationError(f"multi_krum infeasible for N={n}, M={M}")
    selected = krum_select(updates, M, c)
    return Selection(updates[list(selected)].mean(axis=0), selected)


def bulyan(updates: np.ndarray, M: int) -> Selection:
    """Select theta = N - 2M rows Krum-style, then trimmed mean with m = M over them."""
    updates = _matrix(updates)
    n = updates.shape[0]
    theta = n - 2 * M
    if theta <= 2 * M:
        raise ConfigurationError(f"bulyan needs N - 2M > 2M (N={n}, M={M})")
    selected = krum_select(updates, M, theta)
    return Selection(trimmed_mean(updates[list(selected)], M), selected)


def top_singular_vector(
    centered: np.ndarray, rng: np.random.Generator, iterations: int = POWER_ITERATIONS
) -> np.ndarray:
    """Top right singular vector via power iteration on the smaller Gram matrix."""
    n, d = centered.shape
    use_rows = n < d
    gram = centered @ centered.T if use_rows else centered.T @ centered
    v = rng.standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        nxt = gram @ v
        norm = np.linalg.norm(nxt)
        if norm == 0.0:
            break
        nxt /= norm
        if np.linalg.norm(nxt - v) < POWER_TOLERANCE:
            v = nxt
            break
        v = nxt
    if use_rows:
        v = centered.T @ v
        norm = np.linalg.norm(v)
        if norm > 0.0:
            v /= norm
    return v


def dnc(
    updates: np.ndarray,
    M: int,
    e: float,
    iters: int,
    subdim: Optional[int],
    rng: np.random.Generator,
) -> Selection:
    """Divide-and-conquer: drop ceil(e*M) rows per iteration by squared projection on the top
    singular direction of a random coordinate subset; survivors are intersected over iterations."""
    updates = _matrix(updates)
    n, d = updates.shape
    subdim = min(d, subdim) if subdim is not None else min(d, 3072)
    n_remove = math.ceil(e * M)
    if n_remove >= n:
        raise ConfigurationError(f"dnc would remove every row (ceil(e*M)={n_remove}, N={n})")

    survivors = set(range(n))
    for _ in range(iters):
        coords = np.sort(rng.choice(d, size=subdim, replace=False))
        sub = updates[:, coords]
        centered = sub - sub.mean(axis=0)
        v = top_singular_vector(centered, rng)
        scores = (centered @ v) ** 2
        # stable: equal scores keep the lower index
        order = np.argsort(-scores, kind="stable")
        survivors &= set(range(n)) - set(order[:n_remove].tolist())

    if not survivors:
        raise AggregationError("dnc removed every row")
    selected = tuple(sorted(survivors))
    return Selection(updates[list(selected)].mean(axis=0), selected)


def trust_scores(updates: np.ndarray, server_update: np.ndarray) -> np.ndarray:
    """ReLU-clipped cosine similarity of every row to the server update."""
    norms = np.linalg.norm(updates, axis=1)
    cos = np.zeros(updates.shape[0])
    np.divide(
        updates @ server_update,
        norms * np.linalg.norm(server_update),
        out=cos,
        where=norms > 0,
    )
    return np.maximum(cos, 0.0)


def fltrust_aggregate(updates: np.ndarray, server_update: np.ndarray) -> Selection:
    """Trust-weighted mean of rows rescaled to the server update's norm."""
    updates = _matrix(updates)
    server_update = np.asarray(server_update, dtype=np.float64)
    g0_norm = np.linalg.norm(server_update)
    if g0_norm == 0.0:
        raise DegenerateInputError("Server update on the root dataset has zero norm")
    ts = trust_scores(updates, server_update)
    selected = tuple(int(i) for i in np.flatnonzero(ts > 0))
    if not selected:
        return Selection(np.zeros(updates.shape[1]), selected)
    norms = np.linalg.norm(updates, axis=1)
    scaled = updates[list(selected)] * (g0_norm / norms[list(selected)])[:, None]
    weights = ts[list(selected)]
    return Selection(weights @ scaled / weights.sum(), selected)
