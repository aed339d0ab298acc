"""
Scale searches for gamma given a monotone acceptance predicate.
"""

from dataclasses import dataclass
from typing import Callable

from utils.constant import GAMMA_FLOOR
from utils.errors import ConfigurationError

Acceptance = Callable[[float], bool]


@dataclass(frozen=True)
class GammaSearch:
    gamma_init: float = 10.0
    threshold: float = 1e-3  # relative bracket width
    max_iters: int = 60
    floor: float = GAMMA_FLOOR

    def __post_init__(self):
        if self.gamma_init <= 0 or self.threshold <= 0:
            raise ConfigurationError("gamma_init and threshold must be > 0")


@dataclass(frozen=True)
class SearchResult:
    gamma: float
    feasible: bool
    trials: int


def halving_search(accept: Acceptance, search: GammaSearch) -> SearchResult:
    """Start at gamma_init and halve until accepted (first feasible point)."""
    gamma = search.gamma_init
    trials = 0
    while gamma >= search.floor:
        trials += 1
        if accept(gamma):
            return SearchResult(gamma, True, trials)
        gamma /= 2.0
    return SearchResult(search.floor, False, trials)


def maximize_gamma(accept: Acceptance, search: GammaSearch) -> SearchResult:
    """Largest accepted gamma in (0, gamma_init], to within `threshold` relative.

    Halves down to the first accepted point, then bisects between it and the last
    rejected value, so the result is never below the halving result.
    """
    first = halving_search(accept, search)
    if not first.feasible or first.gamma == search.gamma_init:
        return first
    lo, hi = first.gamma, first.gamma * 2.0
    trials = first.trials
    for _ in range(search.max_iters):
        if hi - lo <= search.threshold * lo:
            break
        mid = 0.5 * (lo + hi)
        trials += 1
        if accept(mid):
            lo = mid
        else:
            hi = mid
    return SearchResult(lo, True, trials)
