"""
Attack orchestration: which rows an adversary sees, which generator runs, and what the
malicious participants upload.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from attacks.model_poisoning import (
    adaptive_flguard_attack,
    dyn_opt_attack,
    lie_attack,
    min_max_attack,
    min_sum_attack,
    sign_flip,
    stat_opt_attack,
)
from attacks.perturbation import make_perturbation
from attacks.search import GammaSearch
from data.dataset import Dataset, concat
from data.label_flip import dynamic_label_flip, static_label_flip
from defenses.base import Defense, RoundContext
from models.experiment import AttackSpec, FLConfig
from nn.network import Architecture, init_model
from nn.training import fit_classifier
from utils.constant import DATA_ATTACKS, THREAT_MODELS
from utils.errors import (
    AggregationError,
    ConfigurationError,
    DegenerateInputError,
    InsufficientRowsError,
)
from utils.rng import derive_rng

logger = logging.getLogger(__name__)


@dataclass
class CraftOutcome:
    updates: dict[int, np.ndarray] = field(default_factory=dict)
    gamma: Optional[float] = None
    skipped: bool = False


class AttackService:
    """Applies one AttackSpec for a whole experiment."""

    def __init__(self, spec: AttackSpec, fl: FLConfig, seed: int):
        self.spec = spec
        self.fl = fl
        self.seed = seed
        self.search = GammaSearch(spec.gamma_init, spec.threshold, spec.max_iters)
        self.knows_benign = THREAT_MODELS[spec.threat_type][0]

    @property
    def active(self) -> bool:
        return self.spec.kind != "none"

    @property
    def poisons_data(self) -> bool:
        return self.spec.kind in DATA_ATTACKS

    def poison_clients(
        self, clients: list[Dataset], malicious_ids: list[int], arch: Architecture
    ) -> list[Dataset]:
        """Label-flip the malicious clients' local data once, before training starts."""
        if not self.poisons_data or not malicious_ids:
            return clients
        poisoned = list(clients)
        if self.spec.kind == "slf":
            for cid in malicious_ids:
                poisoned[cid] = static_label_flip(clients[cid])
        else:
            surrogate = self._train_surrogate([clients[c] for c in malicious_ids], arch)
            for cid in malicious_ids:
                poisoned[cid] = dynamic_label_flip(clients[cid], surrogate)
        logger.info(f"{self.spec.kind.upper()} applied to clients {list(malicious_ids)}")
        return poisoned

    def _train_surrogate(self, own: list[Dataset], arch: Architecture):
        pooled = concat([d for d in own if len(d)] or own, own[0].n_classes)
        rng = derive_rng(self.seed, "attack", 1)
        model = init_model(arch, rng)
        if len(pooled) == 0:
            return model
        model, _ = fit_classifier(
            model,
            pooled.features,
            pooled.labels,
            self.spec.surrogate_steps,
            self.fl.alpha,
            self.fl.b,
            rng,
        )
        return model

    def visible_rows(
        self, honest: dict[int, np.ndarray], benign_ids: list[int], malicious_ids: list[int]
    ) -> np.ndarray:
        """Benign participants' rows when the threat model reveals them, else the adversary's own."""
        ids = benign_ids if self.knows_benign else malicious_ids
        if not ids:
            return np.empty((0, 0))
        return np.vstack([honest[c] for c in ids])

    def craft(
        self,
        honest: dict[int, np.ndarray],
        benign_ids: list[int],
        malicious_ids: list[int],
        defense: Defense,
        ctx: RoundContext,
    ) -> CraftOutcome:
        """Uploads for the malicious participants of one round."""
        if not self.active or self.poisons_data:
            return CraftOutcome()
        if not malicious_ids:
            return CraftOutcome(skipped=True)
        kind = self.spec.kind
        if kind == "sf":
            return CraftOutcome({c: sign_flip(honest[c]) for c in malicious_ids})

        visible = self.visible_rows(honest, benign_ids, malicious_ids)
        try:
            crafted = self._model_attack(kind, visible, len(malicious_ids), defense, ctx)
        except (InsufficientRowsError, DegenerateInputError) as e:
            logger.warning(f"Round {ctx.round}: {kind} skipped, malicious clients stay honest ({e})")
            return CraftOutcome(skipped=True)
        logger.debug(f"Round {ctx.round}: {kind} gamma={crafted.gamma}")
        return CraftOutcome(
            {c: crafted.update.copy() for c in malicious_ids}, gamma=crafted.gamma
        )

    def _model_attack(self, kind, visible, n_malicious, defense, ctx):
        if visible.shape[0] == 0:
            raise InsufficientRowsError("No visible rows")
        if kind == "lie":
            return lie_attack(visible, self.spec.lie_z)

        p = make_perturbation(self.spec.perturbation, visible)
        if kind == "min_max":
            return min_max_attack(visible, p, self.search)
        if kind == "min_sum":
            return min_sum_attack(visible, p, self.search)
        if kind == "adaptive" and defense.kind == "flguard":
            return adaptive_flguard_attack(
                visible, defense.attacker_view(), p, self.search, n_malicious
            )
        oracle = agr_oracle(defense, visible, p, n_malicious, ctx)
        if kind == "stat_opt":
            return stat_opt_attack(visible, oracle, p, self.search)
        return dyn_opt_attack(visible, oracle, p, self.search)


def agr_oracle(
    defense: Defense, visible: np.ndarray, p: np.ndarray, n_malicious: int, ctx: RoundContext
):
    """gamma -> accepted, simulating the defense on visible rows plus n_malicious crafted rows."""
    mu = visible.mean(axis=0)
    malicious_rows = list(range(visible.shape[0], visible.shape[0] + n_malicious))
    baseline = np.vstack([visible, np.tile(mu, (n_malicious, 1))])
    try:
        defense.preview(baseline, ctx)
    except (ConfigurationError, AggregationError) as e:
        raise InsufficientRowsError(f"{defense.kind} cannot be simulated on {baseline.shape[0]} rows: {e}") from e

    def accept(gamma: float) -> bool:
        candidate = np.vstack([visible, np.tile(mu + gamma * p, (n_malicious, 1))])
        return defense.accepts(candidate, baseline, malicious_rows, ctx)

    return accept
