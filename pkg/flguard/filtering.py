"""
Per-round FLGuard filtering: encode both feature branches, project to 2-D, split into two
single-linkage clusters, keep the benign-looking cluster, and intersect the branches.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from flguard.assets import FLGuardAssets
from flguard.contrastive import encode
from utils.errors import AggregationError, InsufficientRowsError

logger = logging.getLogger(__name__)


def pca2(h: np.ndarray, components: int = 2) -> np.ndarray:
    """Projection of mean-centered rows onto the top principal directions.

    Each direction's sign is fixed so its largest-magnitude loading is positive.
    """
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    if h.shape[0] < 2:
        raise InsufficientRowsError("PCA needs at least 2 rows")
    centered = h - h.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    directions = vt[:components]
    pivots = np.argmax(np.abs(directions), axis=1)
    signs = np.sign(directions[np.arange(directions.shape[0]), pivots])
    signs[signs == 0] = 1.0
    projected = centered @ (directions * signs[:, None]).T
    if projected.shape[1] < components:
        projected = np.hstack(
            [projected, np.zeros((projected.shape[0], components - projected.shape[1]))]
        )
    return projected


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        self.parent[max(ri, rj)] = min(ri, rj)
        return True


def ahc_two_clusters(points: np.ndarray) -> tuple[list[int], list[int]]:
    """Single-linkage agglomeration down to two clusters.

    Merges follow point pairs ordered by (distance, i, j); the cluster holding the smallest
    index is returned first.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if n < 2:
        raise InsufficientRowsError("Clustering needs at least 2 points")
    dist = squareform(pdist(points))
    edges = sorted((dist[i, j], i, j) for i in range(n) for j in range(i + 1, n))
    sets = _DisjointSet(n)
    clusters = n
    for _, i, j in edges:
        if clusters == 2:
            break
        if sets.union(i, j):
            clusters -= 1
    root_zero = sets.find(0)
    first = [i for i in range(n) if sets.find(i) == root_zero]
    second = [i for i in range(n) if sets.find(i) != root_zero]
    return first, second


def _mean_intra_distance(points: np.ndarray, cluster: list[int]) -> float:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if len(cluster) < 2:
        return 0.0
    return float(pdist(points[cluster]).mean())


def pick_benign(points: np.ndarray, cluster_a: list[int], cluster_b: list[int]) -> list[int]:
    """Larger cluster; on equal size the denser one; then the one holding index 0."""
    if len(cluster_a) != len(cluster_b):
        return cluster_a if len(cluster_a) > len(cluster_b) else cluster_b
    spread_a = _mean_intra_distance(points, cluster_a)
    spread_b = _mean_intra_distance(points, cluster_b)
    if spread_a != spread_b:
        return cluster_a if spread_a < spread_b else cluster_b
    return cluster_a if 0 in cluster_a else cluster_b


@dataclass(frozen=True)
class FilterOutcome:
    selected: tuple[int, ...]
    c_lv: tuple[int, ...]
    c_rd: tuple[int, ...]
    fallback: bool = False


def branch_selection(
    assets: FLGuardAssets, branch: str, updates: np.ndarray, components: int = 2
) -> tuple[int, ...]:
    model = assets.model_lv if branch == "lv" else assets.model_rd
    reps = encode(model, assets.preprocess(branch, updates))
    points = pca2(reps, components)
    cluster_a, cluster_b = ahc_two_clusters(points)
    return tuple(sorted(pick_benign(points, cluster_a, cluster_b)))


def filter_clients(
    updates: np.ndarray, assets: FLGuardAssets, components: int = 2
) -> FilterOutcome:
    """Clients both branches judge benign; the low-variance choice when they disagree entirely."""
    updates = np.atleast_2d(np.asarray(updates, dtype=np.float64))
    n = updates.shape[0]
    if n < 2:
        everyone = tuple(range(n))
        return FilterOutcome(everyone, everyone, everyone)
    c_lv = branch_selection(assets, "lv", updates, components)
    c_rd = branch_selection(assets, "rd", updates, components)
    selected = tuple(sorted(set(c_lv) & set(c_rd)))
    if not selected:
        logger.warning(
            f"FLGuard branches share no client (lv={list(c_lv)}, rd={list(c_rd)}); "
            "falling back to the low-variance selection"
        )
        return FilterOutcome(c_lv, c_lv, c_rd, fallback=True)
    return FilterOutcome(selected, c_lv, c_rd)


def flguard_aggregate(updates: np.ndarray, selected) -> np.ndarray:
    selected = list(selected)
    if not selected:
        raise AggregationError("FLGuard selection is empty")
    return np.asarray(updates, dtype=np.float64)[selected].mean(axis=0)
