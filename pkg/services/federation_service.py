"""
Federated training loop: participation sampling, parallel client updates, attack injection,
defense aggregation and the global step.
"""

import logging
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from tqdm import tqdm

from data.dataset import Dataset
from defenses.base import Defense, RoundContext
from models.experiment import FLConfig
from models.report import ExperimentReport, RoundReport
from nn.network import ModelParameters, flatten, unflatten
from nn.training import local_update
from properties.config import Configuration
from services.attack_service import AttackService
from services.metrics_service import evaluate_accuracy, filtering_scores, tail_statistics
from utils.errors import ConfigurationError
from utils.rng import derive_rng

logger = logging.getLogger(__name__)

__all__ = ["FederatedTrainer", "RoundState", "apply_global_update", "local_update", "run_experiment"]


def apply_global_update(model: ModelParameters, g_agr: np.ndarray, eta: float) -> ModelParameters:
    """w' = w + eta * G_agr (updates are deltas w_I - w)."""
    flat = flatten(model)
    g_agr = np.asarray(g_agr, dtype=np.float64)
    if g_agr.shape != flat.shape:
        raise ConfigurationError(
            f"Aggregate has dimension {g_agr.size}, model has {flat.size}"
        )
    return unflatten(flat + eta * g_agr, model.architecture).copy()


@dataclass
class RoundState:
    round_index: int
    model: ModelParameters
    history: deque = field(default_factory=deque)  # last k update matrices
    assets: Optional[object] = None  # FLGuard assets in force after the round


class FederatedTrainer:
    """Runs rounds of one experiment against fixed clients, attack and defense."""

    def __init__(
        self,
        fl: FLConfig,
        clients: list[Dataset],
        test: Dataset,
        attack: AttackService,
        defense: Defense,
        malicious_ids: list[int],
        seed: int,
        threads: int = Configuration.FLSIM_THREADS,
        record_timing: bool = Configuration.FLSIM_RECORD_TIMING,
    ):
        if len(clients) != fl.N:
            raise ConfigurationError(f"Expected {fl.N} clients, got {len(clients)}")
        self.fl = fl
        self.clients = clients
        self.test = test
        self.attack = attack
        self.defense = defense
        self.malicious_ids = sorted(malicious_ids)
        self.seed = seed
        self.threads = max(1, threads)
        self.record_timing = record_timing

    def initial_state(self, model: ModelParameters) -> RoundState:
        return RoundState(0, model, deque(maxlen=self.fl.k))

    def sample_participants(self, round_index: int) -> list[int]:
        if self.fl.participants == self.fl.N:
            return list(range(self.fl.N))
        rng = derive_rng(self.seed, "participation", round_index)
        return sorted(rng.choice(self.fl.N, size=self.fl.participants, replace=False).tolist())

    def _client_update(self, model: ModelParameters, round_index: int, cid: int) -> np.ndarray:
        data = self.clients[cid]
        return local_update(
            model,
            self.fl.I,
            data.features,
            data.labels,
            self.fl.b,
            self.fl.alpha,
            derive_rng(self.seed, "client", round_index, cid),
            optimizer=self.fl.local_optimizer,
        )

    def honest_updates(self, model: ModelParameters, round_index: int, ids: list[int]) -> dict[int, np.ndarray]:
        """Client updates keyed by id; each client draws from its own stream so order is irrelevant."""
        if self.threads == 1:
            vectors = [self._client_update(model, round_index, c) for c in ids]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                vectors = list(pool.map(lambda c: self._client_update(model, round_index, c), ids))
        return dict(zip(ids, vectors))

    def run_round(self, state: RoundState) -> tuple[RoundState, RoundReport]:
        started = time.perf_counter()
        r = state.round_index + 1
        self.defense.begin_round(r)

        sampled = self.sample_participants(r)
        participants = [c for c in sampled if len(self.clients[c]) > 0]
        skipped = sorted(set(sampled) - set(participants))
        if skipped:
            logger.warning(f"Round {r}: clients {skipped} have no data and are skipped")
        malicious = [c for c in participants if c in set(self.malicious_ids)]
        benign = [c for c in participants if c not in set(self.malicious_ids)]

        honest = self.honest_updates(state.model, r, participants)
        ctx = RoundContext(r, state.model, self.seed, tuple(state.history))
        crafted = self.attack.craft(honest, benign, malicious, self.defense, ctx)
        uploads = {**honest, **crafted.updates}
        matrix = np.vstack([uploads[c] for c in participants])

        history = deque(state.history, maxlen=self.fl.k)
        history.append(matrix)
        ctx = RoundContext(r, state.model, self.seed, tuple(history))
        result = self.defense.aggregate(matrix, ctx)
        model = apply_global_update(state.model, result.vector, self.fl.eta)

        selected = [participants[i] for i in result.selected]
        scores = filtering_scores(selected, participants, malicious)
        acc = evaluate_accuracy(model, self.test)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        timing = (lambda v: round(v, 3)) if self.record_timing else (lambda v: 0.0)

        report = RoundReport(
            round=r,
            acc=acc,
            selected=selected,
            n_participants=len(participants),
            n_malicious=len(malicious),
            tp=scores.tp,
            fp=scores.fp,
            tn=scores.tn,
            fn=scores.fn,
            precision=scores.precision,
            recall=scores.recall,
            f1=scores.f1,
            f1_defined=scores.f1_defined,
            fallback=result.fallback,
            attack_skipped=crafted.skipped,
            gamma=crafted.gamma,
            wall_ms=timing(elapsed_ms),
            train_ms=timing(result.train_ms),
            filter_ms=timing(result.filter_ms),
        )
        logger.debug(f"Round {r}: acc={acc:.4f} selected={len(selected)}/{len(participants)}")
        next_state = RoundState(r, model, history, getattr(self.defense, "assets", None))
        return next_state, report


def run_experiment(
    trainer: FederatedTrainer,
    model: ModelParameters,
    config_echo: dict,
    show_progress: bool = Configuration.FLSIM_PROGRESS,
) -> ExperimentReport:
    """Run fl.R rounds from `model` and summarize them."""
    state = trainer.initial_state(model)
    initial_accuracy = evaluate_accuracy(model, trainer.test)
    rounds: list[RoundReport] = []
    logger.info(
        f"Experiment start: R={trainer.fl.R}, N={trainer.fl.N}, malicious={trainer.malicious_ids}, "
        f"attack={trainer.attack.spec.kind}, defense={trainer.defense.kind}"
    )
    try:
        for _ in tqdm(range(trainer.fl.R), desc="rounds", disable=not show_progress):
            state, report = trainer.run_round(state)
            rounds.append(report)
    finally:
        trainer.defense.close()

    accuracies = [r.acc for r in rounds]
    tail_mean, tail_std = tail_statistics(accuracies)
    assets = getattr(trainer.defense, "assets", None)
    losses = {"lv": list(assets.losses_lv), "rd": list(assets.losses_rd)} if assets else {}
    final = accuracies[-1] if accuracies else initial_accuracy
    logger.info(f"Experiment end: final accuracy {final:.4f} after {len(rounds)} round(s)")
    return ExperimentReport(
        config=config_echo,
        rounds=rounds,
        initial_accuracy=initial_accuracy,
        final_accuracy=final,
        tail_mean_accuracy=tail_mean if rounds else initial_accuracy,
        tail_std_accuracy=tail_std,
        training_events=getattr(trainer.defense, "training_events", 0),
        contrastive_losses=losses,
    )
