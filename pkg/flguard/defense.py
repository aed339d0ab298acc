"""
FLGuard as a round-loop defense: refreshes the contrastive models every k rounds on the window
of the last k update matrices, and filters each round with the current assets.
"""

import logging
import time
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Optional

import numpy as np

from defenses.base import AggregationResult, Defense, RoundContext
from flguard.assets import FLGuardAssets, deserialize_assets, serialize_assets
from flguard.filtering import filter_clients, flguard_aggregate
from flguard.training import train_contrastive
from models.experiment import FLGuardHyper
from utils.rng import derive_rng

logger = logging.getLogger(__name__)


class FLGuardDefense(Defense):
    kind = "flguard"

    def __init__(self, hyper: FLGuardHyper, k: int, seed: int):
        self.hyper = hyper
        self.k = k
        self.seed = seed
        self.assets: Optional[FLGuardAssets] = None
        self.training_events = 0
        self._pending: Optional[Future] = None
        self._executor = (
            ThreadPoolExecutor(max_workers=1, thread_name_prefix="flguard-train")
            if hyper.background
            else None
        )

    def begin_round(self, round_index: int) -> None:
        """Swap in assets trained in the background before this round uses them."""
        if self._pending is not None:
            self.assets = self._pending.result()
            self._pending = None
            logger.debug(f"Round {round_index}: swapped in assets from round {self.assets.trained_at_round}")

    def assets_blob(self) -> Optional[bytes]:
        """Current assets as the versioned blob a white-box adversary receives."""
        return serialize_assets(self.assets) if self.assets is not None else None

    def attacker_view(self) -> Optional[FLGuardAssets]:
        blob = self.assets_blob()
        return deserialize_assets(blob) if blob is not None else None

    def _select(self, updates: np.ndarray) -> tuple[tuple[int, ...], bool]:
        if self.assets is None:
            return tuple(range(updates.shape[0])), False
        outcome = filter_clients(updates, self.assets, self.hyper.pca_components)
        return outcome.selected, outcome.fallback

    def preview(self, updates, ctx):
        updates = np.atleast_2d(np.asarray(updates, dtype=np.float64))
        selected, fallback = self._select(updates)
        return AggregationResult(flguard_aggregate(updates, selected), selected, fallback)

    def _refresh(self, round_index: int, window: np.ndarray) -> tuple[bool, float]:
        if window.shape[0] < self.hyper.batch:
            logger.warning(
                f"Round {round_index}: training window has {window.shape[0]} rows, "
                f"fewer than batch {self.hyper.batch}; keeping previous assets"
            )
            return False, 0.0
        rng = derive_rng(self.seed, "contrastive", round_index)
        self.training_events += 1
        if self._executor is not None:
            self._pending = self._executor.submit(
                train_contrastive, window, self.hyper, rng, round_index
            )
            return True, 0.0
        started = time.perf_counter()
        self.assets = train_contrastive(window, self.hyper, rng, round_index)
        return True, (time.perf_counter() - started) * 1000.0

    def aggregate(self, updates: np.ndarray, ctx: RoundContext) -> AggregationResult:
        self.begin_round(ctx.round)
        updates = np.atleast_2d(np.asarray(updates, dtype=np.float64))
        trained, train_ms = False, 0.0
        if ctx.round % self.k == 0:
            window = np.vstack(ctx.history) if ctx.history else updates
            trained, train_ms = self._refresh(ctx.round, window)

        started = time.perf_counter()
        selected, fallback = self._select(updates)
        filter_ms = (time.perf_counter() - started) * 1000.0
        logger.debug(f"Round {ctx.round}: FLGuard kept {list(selected)}")
        return AggregationResult(
            flguard_aggregate(updates, selected),
            selected,
            fallback=fallback,
            trained=trained,
            train_ms=train_ms,
            filter_ms=filter_ms,
        )

    def close(self) -> None:
        self.begin_round(-1)
        if self._executor is not None:
            self._executor.shutdown(wait=True)
