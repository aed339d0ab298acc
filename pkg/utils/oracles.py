"""
Brute-force reference implementations, written for clarity rather than speed.

Shared by the test-suite and the `oracle` CLI subcommand.
"""

import math
from typing import Sequence

import numpy as np

Rows = Sequence[Sequence[float]]


def mean_oracle(rows: Rows) -> list[float]:
    n = len(rows)
    return [sum(row[j] for row in rows) / n for j in range(len(rows[0]))]


def trimmed_mean_oracle(rows: Rows, m: int) -> list[float]:
    out = []
    for j in range(len(rows[0])):
        column = sorted(row[j] for row in rows)
        kept = column[m : len(column) - m]
        out.append(sum(kept) / len(kept))
    return out


def _sq(a, b) -> float:
    return sum((x - y) ** 2 for x, y in zip(a, b))


def krum_selection_oracle(rows: Rows, M: int, count: int) -> list[int]:
    remaining = list(range(len(rows)))
    chosen = []
    while len(chosen) < count:
        if len(remaining) == 1:
            chosen.append(remaining.pop())
            continue
        n_neighbors = max(1, len(remaining) - M - 2)
        best, best_score = None, math.inf
        for i in remaining:
            dists = sorted(_sq(rows[i], rows[j]) for j in remaining if j != i)
            score = sum(dists[:n_neighbors])
            if score < best_score:
                best, best_score = i, score
        chosen.append(best)
        remaining.remove(best)
    return sorted(chosen)


def multi_krum_oracle(rows: Rows, M: int) -> list[float]:
    selected = krum_selection_oracle(rows, M, len(rows) - 2 * M - 3)
    return mean_oracle([rows[i] for i in selected])


def bulyan_oracle(rows: Rows, M: int) -> list[float]:
    selected = krum_selection_oracle(rows, M, len(rows) - 2 * M)
    return trimmed_mean_oracle([rows[i] for i in selected], M)


def single_linkage_oracle(points: Rows) -> list[list[int]]:
    """Merge the two clusters holding the closest cross pair (ties: smallest (i, j)) until two remain."""
    points = [list(p) if isinstance(p, (list, tuple)) else [p] for p in points]
    clusters = [[i] for i in range(len(points))]
    while len(clusters) > 2:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                for i in clusters[a]:
                    for j in clusters[b]:
                        key = (math.dist(points[i], points[j]), min(i, j), max(i, j))
                        if best is None or key < best[0]:
                            best = (key, a, b)
        _, a, b = best
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]
    clusters.sort(key=min)
    return clusters


def nt_xent_oracle(z: Rows, tau: float) -> float:
    """Direct double loop over the 2B rows; (2i, 2i+1) are positive pairs."""
    n = len(z)
    unit = []
    for row in z:
        norm = math.sqrt(sum(x * x for x in row))
        unit.append([x / norm for x in row])

    def sim(i, j):
        return sum(a * b for a, b in zip(unit[i], unit[j])) / tau

    total = 0.0
    for i in range(n):
        j = i ^ 1
        denominator = sum(math.exp(sim(i, k)) for k in range(n) if k != i)
        total += -math.log(math.exp(sim(i, j)) / denominator)
    return total / n


def pca_eig_oracle(h: Rows, components: int = 2) -> np.ndarray:
    """Projections on the top eigenvectors of the covariance, sign fixed like pca2."""
    h = np.asarray(h, dtype=np.float64)
    centered = h - h.mean(axis=0)
    values, vectors = np.linalg.eigh(centered.T @ centered)
    order = np.argsort(values)[::-1][:components]
    directions = vectors[:, order].T
    pivots = np.argmax(np.abs(directions), axis=1)
    signs = np.sign(directions[np.arange(len(order)), pivots])
    return centered @ (directions * signs[:, None]).T


ORACLES = ("trimmed-mean", "multi-krum", "bulyan", "krum-score", "ahc", "nt-xent", "pca")


def krum_scores_oracle(rows: Rows, M: int) -> list[float]:
    n_neighbors = max(1, len(rows) - M - 2)
    scores = []
    for i in range(len(rows)):
        dists = sorted(_sq(rows[i], rows[j]) for j in range(len(rows)) if j != i)
        scores.append(sum(dists[:n_neighbors]))
    return scores


def run_oracle(name: str, fixture: dict):
    """Dispatch for the CLI: fixture keys are rows/points/z plus m, M, tau."""
    if name == "trimmed-mean":
        return trimmed_mean_oracle(fixture["rows"], int(fixture.get("m", 0)))
    if name == "multi-krum":
        return multi_krum_oracle(fixture["rows"], int(fixture.get("M", 0)))
    if name == "bulyan":
        return bulyan_oracle(fixture["rows"], int(fixture.get("M", 0)))
    if name == "krum-score":
        return krum_scores_oracle(fixture["rows"], int(fixture.get("M", 0)))
    if name == "ahc":
        return single_linkage_oracle(fixture["points"])
    if name == "nt-xent":
        return nt_xent_oracle(fixture["z"], float(fixture.get("tau", 0.01)))
    if name == "pca":
        return pca_eig_oracle(fixture["rows"], int(fixture.get("components", 2))).tolist()
    raise KeyError(name)
