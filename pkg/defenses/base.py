"""
Defense interface used by the round loop and by AGR-aware attacks.

A defense turns the round's update matrix into one aggregate vector. `preview` must not change
any defense state, so attacks can query it as a white-box oracle while crafting.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from data.dataset import Dataset
from defenses.aggregators import (
    bulyan,
    dnc,
    fed_avg,
    fltrust_aggregate,
    multi_krum,
    trimmed_mean,
)
from nn.network import ModelParameters
from nn.training import local_update
from utils.constant import DIMENSION_DEFENSES
from utils.rng import derive_rng

logger = logging.getLogger(__name__)

# dimension-wise acceptance margin over the gamma = 0 displacement
DISPLACEMENT_MARGIN = 1e-12


@dataclass(frozen=True)
class RoundContext:
    round: int
    model: ModelParameters
    seed: int
    history: tuple[np.ndarray, ...] = ()  # last k update matrices, current round included


@dataclass(frozen=True)
class AggregationResult:
    vector: np.ndarray
    selected: tuple[int, ...]  # row positions that contributed
    fallback: bool = False
    trained: bool = False
    train_ms: float = 0.0
    filter_ms: float = 0.0


class Defense(ABC):
    kind: str = ""

    @property
    def dimension_wise(self) -> bool:
        return self.kind in DIMENSION_DEFENSES

    @abstractmethod
    def preview(self, updates: np.ndarray, ctx: RoundContext) -> AggregationResult:
        """Aggregate without side effects."""

    def aggregate(self, updates: np.ndarray, ctx: RoundContext) -> AggregationResult:
        return self.preview(updates, ctx)

    def begin_round(self, round_index: int) -> None:
        pass

    def close(self) -> None:
        pass

    def accepts(
        self, candidate: np.ndarray, baseline: np.ndarray, malicious_rows: list[int], ctx: RoundContext
    ) -> bool:
        """Whether the crafted rows in `candidate` get through this rule.

        Vector-wise rules accept when any malicious row is selected. Dimension-wise rules accept
        when the aggregate moves further from the honest mean than it does for `baseline`
        (the same matrix with gamma = 0).
        """
        if not self.dimension_wise:
            selected = set(self.preview(candidate, ctx).selected)
            return bool(selected & set(malicious_rows))
        honest = np.delete(candidate, malicious_rows, axis=0)
        if honest.shape[0] == 0:
            return True
        mu = honest.mean(axis=0)
        moved = np.linalg.norm(self.preview(candidate, ctx).vector - mu)
        base = np.linalg.norm(self.preview(baseline, ctx).vector - mu)
        return bool(moved > base + DISPLACEMENT_MARGIN)


def _all(n: int) -> tuple[int, ...]:
    return tuple(range(n))


class FedAvgDefense(Defense):
    kind = "fed_avg"

    def preview(self, updates, ctx):
        return AggregationResult(fed_avg(updates), _all(len(updates)))


class TrimmedMeanDefense(Defense):
    kind = "trimmed_mean"

    def __init__(self, m: int):
        self.m = m

    def preview(self, updates, ctx):
        return AggregationResult(trimmed_mean(updates, self.m), _all(len(updates)))


class MultiKrumDefense(Defense):
    kind = "multi_krum"

    def __init__(self, M: int):
        self.M = M

    def preview(self, updates, ctx):
        result = multi_krum(updates, self.M)
        return AggregationResult(result.vector, result.selected)


class BulyanDefense(Defense):
    kind = "bulyan"

    def __init__(self, M: int):
        self.M = M

    def preview(self, updates, ctx):
        result = bulyan(updates, self.M)
        return AggregationResult(result.vector, result.selected)


class DnCDefense(Defense):
    kind = "dnc"

    def __init__(self, M: int, e: float, iters: int, subdim: Optional[int]):
        self.M = M
        self.e = e
        self.iters = iters
        self.subdim = subdim

    def preview(self, updates, ctx):
        # one generator per round so oracle queries see the same coordinates as the real call
        rng = derive_rng(ctx.seed, "defense", ctx.round)
        result = dnc(updates, self.M, self.e, self.iters, self.subdim, rng)
        return AggregationResult(result.vector, result.selected)


class FLTrustDefense(Defense):
    """Trust scores against the server's own update on a small root dataset."""

    kind = "fltrust"

    def __init__(
        self,
        root: Dataset,
        iterations: int,
        batch_size: int,
        lr: float,
        optimizer: str = "sgd",
    ):
        self.root = root
        self.iterations = iterations
        self.batch_size = batch_size
        self.lr = lr
        self.optimizer = optimizer
        self._cache: Optional[tuple[int, np.ndarray]] = None

    def server_update(self, ctx: RoundContext) -> np.ndarray:
        if self._cache is None or self._cache[0] != ctx.round:
            rng = derive_rng(ctx.seed, "defense", ctx.round)
            g0 = local_update(
                ctx.model,
                self.iterations,
                self.root.features,
                self.root.labels,
                self.batch_size,
                self.lr,
                rng,
                optimizer=self.optimizer,
            )
            self._cache = (ctx.round, g0)
        return self._cache[1]

    def preview(self, updates, ctx):
        result = fltrust_aggregate(updates, self.server_update(ctx))
        return AggregationResult(result.vector, result.selected, fallback=not result.selected)


def fltrust(
    updates: np.ndarray,
    root: Dataset,
    model: ModelParameters,
    iterations: int,
    batch_size: int,
    lr: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """FLTrust aggregate with g0 = local_update on the root dataset."""
    g0 = local_update(model, iterations, root.features, root.labels, batch_size, lr, rng)
    return fltrust_aggregate(updates, g0).vector
