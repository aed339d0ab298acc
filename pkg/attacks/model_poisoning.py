"""
Model-poisoning update generators.

Every generator receives only the rows its threat model lets it see and returns the single
update that all malicious participants upload this round (sign-flip excepted, which is
per-client).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from attacks.search import GammaSearch, halving_search, maximize_gamma
from flguard.assets import FLGuardAssets
from flguard.filtering import filter_clients
from utils.errors import InsufficientRowsError

logger = logging.getLogger(__name__)

# gamma -> accepted? for the configured aggregation rule
AgrOracle = Callable[[float], bool]


@dataclass(frozen=True)
class Crafted:
    update: np.ndarray
    gamma: Optional[float] = None
    feasible: bool = True


def _visible(benign: np.ndarray, minimum: int) -> np.ndarray:
    benign = np.atleast_2d(np.asarray(benign, dtype=np.float64))
    if benign.shape[0] < minimum:
        raise InsufficientRowsError(
            f"Attack needs at least {minimum} visible row(s), got {benign.shape[0]}"
        )
    return benign


def lie_attack(benign: np.ndarray, z: float = 1.5) -> Crafted:
    """mu + z * sigma per coordinate (population std of the visible rows)."""
    rows = _visible(benign, 2)
    return Crafted(rows.mean(axis=0) + z * rows.std(axis=0), gamma=z)


def sign_flip(own_update: np.ndarray) -> np.ndarray:
    return -np.asarray(own_update, dtype=np.float64)


def _pairwise_sq(rows: np.ndarray) -> np.ndarray:
    return np.stack([((rows - row) ** 2).sum(axis=1) for row in rows])


def min_max_attack(benign: np.ndarray, p: np.ndarray, search: GammaSearch) -> Crafted:
    """Largest gamma keeping max_i ||g_m - g_i|| within the largest benign pairwise distance."""
    rows = _visible(benign, 2)
    mu = rows.mean(axis=0)
    bound = _pairwise_sq(rows).max()

    def accept(gamma: float) -> bool:
        candidate = mu + gamma * p
        return bool(((rows - candidate) ** 2).sum(axis=1).max() <= bound)

    return _bounded(mu, p, accept, search, "Min-Max")


def min_sum_attack(benign: np.ndarray, p: np.ndarray, search: GammaSearch) -> Crafted:
    """Largest gamma keeping sum_i ||g_m - g_i||^2 within max_i sum_j ||g_i - g_j||^2."""
    rows = _visible(benign, 2)
    mu = rows.mean(axis=0)
    bound = _pairwise_sq(rows).sum(axis=1).max()

    def accept(gamma: float) -> bool:
        candidate = mu + gamma * p
        return bool(((rows - candidate) ** 2).sum() <= bound)

    return _bounded(mu, p, accept, search, "Min-Sum")


def _bounded(mu, p, accept, search: GammaSearch, name: str) -> Crafted:
    result = maximize_gamma(accept, search)
    if not result.feasible:
        logger.warning(f"{name} bound unsatisfiable for every searched gamma; uploading the benign mean")
        return Crafted(mu.copy(), gamma=0.0, feasible=False)
    return Crafted(mu + result.gamma * p, gamma=result.gamma)


def stat_opt_attack(
    benign: np.ndarray, agr_oracle: AgrOracle, p: np.ndarray, search: GammaSearch
) -> Crafted:
    """First gamma, halving from gamma_init, that the aggregation rule accepts."""
    mu = _visible(benign, 1).mean(axis=0)
    result = halving_search(agr_oracle, search)
    if not result.feasible:
        logger.warning(f"STAT-OPT found no accepted gamma above {search.floor}; using the floor")
    return Crafted(mu + result.gamma * p, gamma=result.gamma, feasible=result.feasible)


def dyn_opt_attack(
    benign: np.ndarray, agr_oracle: AgrOracle, p: np.ndarray, search: GammaSearch
) -> Crafted:
    """Largest accepted gamma, bisected to within `threshold` relative."""
    mu = _visible(benign, 1).mean(axis=0)
    result = maximize_gamma(agr_oracle, search)
    if not result.feasible:
        logger.warning(f"DYN-OPT found no accepted gamma above {search.floor}; using the floor")
    return Crafted(mu + result.gamma * p, gamma=result.gamma, feasible=result.feasible)


def flguard_oracle(
    benign: np.ndarray,
    assets: Optional[FLGuardAssets],
    p: np.ndarray,
    n_malicious: int,
    filter_fn=filter_clients,
) -> AgrOracle:
    """Acceptance = at least one crafted row survives FLGuard filtering."""
    rows = _visible(benign, 1)
    mu = rows.mean(axis=0)
    malicious = set(range(rows.shape[0], rows.shape[0] + n_malicious))

    def accept(gamma: float) -> bool:
        if assets is None:
            return True
        crafted = np.tile(mu + gamma * p, (n_malicious, 1))
        outcome = filter_fn(np.vstack([rows, crafted]), assets)
        return bool(malicious & set(outcome.selected))

    return accept


def adaptive_flguard_attack(
    benign: np.ndarray,
    assets: Optional[FLGuardAssets],
    p: np.ndarray,
    search: GammaSearch,
    n_malicious: int = 1,
    filter_fn=filter_clients,
) -> Crafted:
    """DYN-OPT with the white-box FLGuard filter as the acceptance oracle."""
    oracle = flguard_oracle(benign, assets, p, n_malicious, filter_fn)
    return dyn_opt_attack(benign, oracle, p, search)
