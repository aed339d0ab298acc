"""
Experiment configuration models.

Each section maps to a dotted key prefix in the config file (``fl.N = 20``,
``attack.kind = lie``, ...). Field constraints cover single-value invariants; the
cross-field checks live in ExperimentConfig's model validator and name the offending
key in brackets so diagnostics can point at the right line.
"""

import math
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from utils.constant import (
    DATA_ATTACKS,
    FEATURE_DIM,
    THREAT_MODEL_LEGALITY,
    THREAT_MODELS,
)

ThreatType = Literal["T1", "T2", "T3", "T4", "T5"]
AttackKind = Literal[
    "none", "lie", "min_max", "min_sum", "stat_opt", "dyn_opt", "adaptive", "sf", "slf", "dlf"
]
DefenseKind = Literal[
    "fed_avg", "trimmed_mean", "multi_krum", "bulyan", "dnc", "fltrust", "flguard"
]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class PartitionConfig(_Section):
    """Client partitioning parameters."""

    n_clients: int = Field(..., ge=1)
    q: float = Field(..., gt=0.0, le=1.0)
    seed: int = Field(0, ge=0)


class DatasetSection(_Section):
    kind: Literal["synthetic", "idx"] = "synthetic"
    n_classes: int = Field(4, ge=2)
    dim: int = Field(16, ge=1)
    n_per_class: int = Field(250, ge=1)
    spread: float = Field(0.05, ge=0.0)
    test_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    q: Optional[float] = Field(None, gt=0.0, le=1.0, description="None means IID (1/n)")

    @model_validator(mode="after")
    def _check_paths(self):
        if self.kind == "idx":
            missing = [
                name
                for name in ("train_images", "train_labels", "test_images", "test_labels")
                if not getattr(self, name)
            ]
            if missing:
                raise ValueError(f"[dataset.{missing[0]}] idx datasets need {', '.join(missing)}")
        return self

    def concentration(self, n_classes: int) -> float:
        return self.q if self.q is not None else 1.0 / n_classes


class ModelSection(_Section):
    hidden: list[int] = Field(default_factory=lambda: [128])
    alpha: float = Field(0.01, gt=0.0)


class FLConfig(_Section):
    """Federation parameters (rounds, clients, local training, refresh interval)."""

    R: int = Field(60, ge=0)
    N: int = Field(20, ge=1)
    M: int = Field(0, ge=0)
    P: Optional[int] = Field(None, ge=1, description="participants per round; None means N")
    I: int = Field(5, ge=0)
    b: int = Field(32, ge=1)
    eta: float = Field(1.0, gt=0.0)
    alpha: float = Field(0.1, gt=0.0)
    k: int = Field(5, ge=1)
    seed: int = Field(0, ge=0)
    local_optimizer: Literal["sgd", "adam"] = "sgd"

    @model_validator(mode="after")
    def _check_counts(self):
        if 2 * self.M >= self.N:
            raise ValueError(f"[fl.M] M={self.M} violates M/N < 0.5 with N={self.N}")
        if self.P is not None and self.P > self.N:
            raise ValueError(f"[fl.P] P={self.P} exceeds N={self.N}")
        return self

    @property
    def participants(self) -> int:
        return self.P if self.P is not None else self.N


class ThreatModelConfig(_Section):
    type: ThreatType = "T1"
    knows_benign_updates: Optional[bool] = None
    knows_agr: Optional[bool] = None
    capability: Optional[Literal["model", "data"]] = None

    @model_validator(mode="after")
    def _fill_from_table(self):
        benign, agr, capability = THREAT_MODELS[self.type]
        for name, expected in (
            ("knows_benign_updates", benign),
            ("knows_agr", agr),
            ("capability", capability),
        ):
            value = getattr(self, name)
            if value is None:
                setattr(self, name, expected)
            elif value != expected:
                raise ValueError(
                    f"[attack.threat.{name}] {self.type} requires {name}={expected}, got {value}"
                )
        return self


class AttackSpec(_Section):
    kind: AttackKind = "none"
    perturbation: Literal["uv", "sgn", "std"] = "sgn"
    gamma_init: float = Field(10.0, gt=0.0)
    threshold: float = Field(1e-3, gt=0.0)
    max_iters: int = Field(60, ge=1)
    lie_z: float = 1.5
    surrogate_steps: int = Field(200, ge=1, description="DLF surrogate training steps")
    threat: Optional[ThreatModelConfig] = None

    @model_validator(mode="after")
    def _default_threat(self):
        if self.threat is None:
            self.threat = ThreatModelConfig(type="T5" if self.kind in DATA_ATTACKS else "T1")
        return self

    @property
    def threat_type(self) -> str:
        return self.threat.type


class DefenseSpec(_Section):
    kind: DefenseKind = "fed_avg"
    m_trim: Optional[int] = Field(None, ge=0, alias="m")
    M_assumed: Optional[int] = Field(None, ge=0, alias="M")
    dnc_e: float = Field(1.5, gt=0.0, alias="e")
    dnc_iters: int = Field(1, ge=1, alias="iters")
    dnc_subdim: Optional[int] = Field(None, ge=1, alias="subdim")
    root_size: int = Field(100, ge=1)

    def assumed_malicious(self, fl: FLConfig) -> int:
        return self.M_assumed if self.M_assumed is not None else fl.M

    def trim(self, fl: FLConfig) -> int:
        return self.m_trim if self.m_trim is not None else self.assumed_malicious(fl)


class FLGuardHyper(_Section):
    tau: float = Field(0.01, gt=0.0)
    noise_var: float = Field(0.01, ge=0.0)
    mask_ratio: float = Field(0.1, ge=0.0, le=1.0)
    lr: float = Field(0.001, gt=0.0)
    epochs: int = Field(5, ge=1)
    batch: int = Field(32, ge=2)
    pca_components: int = Field(2, ge=1)
    n_clusters: int = Field(2, ge=2, le=2)
    feature_dim: int = Field(FEATURE_DIM, ge=1)
    background: bool = False


class OutputSection(_Section):
    """Unset fields fall back to FLSIM_OUTPUT_DIR / FLSIM_FORMAT."""

    directory: Optional[str] = None
    format: Optional[Literal["csv", "json", "both"]] = None
    name: str = "experiment"


class ExperimentConfig(_Section):
    """Complete, validated experiment description; echoed verbatim into every report."""

    dataset: DatasetSection = Field(default_factory=DatasetSection)
    model: ModelSection = Field(default_factory=ModelSection)
    fl: FLConfig = Field(default_factory=FLConfig)
    attack: AttackSpec = Field(default_factory=AttackSpec)
    defense: DefenseSpec = Field(default_factory=DefenseSpec)
    flguard: FLGuardHyper = Field(default_factory=FLGuardHyper)
    output: OutputSection = Field(default_factory=OutputSection)
    seed: int = Field(0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _cross_checks(self):
        self.fl.seed = self.seed
        fl, attack, defense = self.fl, self.attack, self.defense
        threat = attack.threat_type

        if attack.kind != "none" and attack.kind not in THREAT_MODEL_LEGALITY[threat]:
            raise ValueError(
                f"[attack.kind] attack '{attack.kind}' is not available under threat model {threat}"
            )
        if self.dataset.kind == "synthetic" and fl.N < self.dataset.n_classes:
            raise ValueError(
                f"[fl.N] N={fl.N} cannot form {self.dataset.n_classes} client groups"
            )

        P = fl.participants
        M = defense.assumed_malicious(fl)
        if defense.kind == "trimmed_mean" and P <= 2 * defense.trim(fl):
            raise ValueError(f"[defense.m] trimmed_mean needs P > 2m (P={P}, m={defense.trim(fl)})")
        if defense.kind == "multi_krum" and (P - M - 2 < 1 or P - 2 * M - 3 < 1):
            raise ValueError(f"[defense.M] multi_krum infeasible for P={P}, M={M}")
        if defense.kind == "bulyan" and P - 2 * M <= 2 * M:
            raise ValueError(f"[defense.M] bulyan needs P - 2M > 2M (P={P}, M={M})")
        if defense.kind == "dnc" and math.ceil(defense.dnc_e * M) >= P:
            raise ValueError("[defense.e] dnc would remove every row (e*M >= P)")
        if defense.kind == "flguard" and P * fl.k < self.flguard.batch:
            raise ValueError(
                f"[flguard.batch] training window P*k={P * fl.k} smaller than batch {self.flguard.batch}"
            )
        return self
