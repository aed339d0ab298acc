"""
Per-round and per-experiment report models.
"""

from typing import Any, Optional

from pydantic import BaseModel, Field, model_validator

from utils.constant import CSV_COLUMNS


class RoundReport(BaseModel):
    """Outcome of one federated round."""

    round: int = Field(..., ge=1)
    acc: float = Field(..., ge=0.0, le=1.0, description="global accuracy after the round")
    selected: list[int] = Field(default_factory=list, description="client ids aggregated")
    n_participants: int = 0
    n_malicious: int = 0
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    precision: float = 1.0
    recall: float = 1.0
    f1: float = 1.0
    f1_defined: bool = True
    fallback: bool = False
    attack_skipped: bool = False
    gamma: Optional[float] = None
    wall_ms: float = 0.0
    train_ms: float = 0.0
    filter_ms: float = 0.0

    @model_validator(mode="after")
    def _check_counts(self):
        if self.tp + self.fn != self.n_malicious:
            raise ValueError("tp + fn must equal the malicious participant count")
        if self.tp + self.fp + self.tn + self.fn != self.n_participants:
            raise ValueError("confusion counts must cover every participant")
        return self

    @property
    def n_selected(self) -> int:
        return len(self.selected)

    def csv_row(self) -> dict[str, Any]:
        values = {**self.model_dump(), "n_selected": self.n_selected}
        return {column: values[column] for column in CSV_COLUMNS}


class ExperimentReport(BaseModel):
    config: dict[str, Any]
    rounds: list[RoundReport] = Field(default_factory=list)
    initial_accuracy: float
    final_accuracy: float
    tail_mean_accuracy: float
    tail_std_accuracy: float
    training_events: int = 0
    contrastive_losses: dict[str, list[float]] = Field(default_factory=dict)

    def csv_rows(self) -> list[dict[str, Any]]:
        return [r.csv_row() for r in self.rounds]

    def json_payload(self) -> dict[str, Any]:
        """JSON mirror: the CSV rows under `rounds` plus everything else."""
        return {
            "config": self.config,
            "rounds": self.csv_rows(),
            "round_details": [r.model_dump() for r in self.rounds],
            "initial_accuracy": self.initial_accuracy,
            "final_accuracy": self.final_accuracy,
            "tail_mean_accuracy": self.tail_mean_accuracy,
            "tail_std_accuracy": self.tail_std_accuracy,
            "training_events": self.training_events,
            "contrastive_losses": self.contrastive_losses,
        }
