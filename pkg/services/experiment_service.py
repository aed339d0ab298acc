"""
Experiment service: wires data, attack, defense and the federation loop from one
ExperimentConfig, and writes reports.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from data.dataset import Dataset, sample_iid, train_test_split
from data.idx import load_idx
from data.partition import partition
from data.synthetic import synth_dataset
from defenses.base import (
    BulyanDefense,
    Defense,
    DnCDefense,
    FedAvgDefense,
    FLTrustDefense,
    MultiKrumDefense,
    TrimmedMeanDefense,
)
from flguard.defense import FLGuardDefense
from models.experiment import ExperimentConfig, PartitionConfig
from models.report import ExperimentReport
from nn.network import build_architecture, init_model
from properties.config import Configuration
from services.attack_service import AttackService
from services.federation_service import FederatedTrainer, run_experiment
from utils.common import save_json_to_file, write_csv
from utils.constant import CSV_COLUMNS, SWEEP_AXES
from utils.errors import ConfigurationError
from utils.rng import derive_rng, derive_seed

logger = logging.getLogger(__name__)


@dataclass
class Corpus:
    train: Dataset
    test: Dataset


def load_corpus(cfg: ExperimentConfig) -> Corpus:
    ds = cfg.dataset
    if ds.kind == "idx":
        train = load_idx(ds.train_images, ds.train_labels)
        test = load_idx(ds.test_images, ds.test_labels, train.n_classes)
        return Corpus(train, test)
    full = synth_dataset(
        ds.n_classes, ds.dim, ds.n_per_class, ds.spread, derive_seed(cfg.seed, "dataset")
    )
    train, test = train_test_split(full, ds.test_fraction, derive_rng(cfg.seed, "dataset", 1))
    return Corpus(train, test)


def draw_malicious(cfg: ExperimentConfig) -> list[int]:
    """M of N client ids, drawn once per experiment from the attack stream."""
    if cfg.fl.M == 0:
        return []
    rng = derive_rng(cfg.seed, "attack", 0)
    return sorted(rng.choice(cfg.fl.N, size=cfg.fl.M, replace=False).tolist())


def build_defense(cfg: ExperimentConfig, train: Dataset) -> Defense:
    spec, fl = cfg.defense, cfg.fl
    M = spec.assumed_malicious(fl)
    if spec.kind == "fed_avg":
        return FedAvgDefense()
    if spec.kind == "trimmed_mean":
        return TrimmedMeanDefense(spec.trim(fl))
    if spec.kind == "multi_krum":
        return MultiKrumDefense(M)
    if spec.kind == "bulyan":
        return BulyanDefense(M)
    if spec.kind == "dnc":
        return DnCDefense(M, spec.dnc_e, spec.dnc_iters, spec.dnc_subdim)
    if spec.kind == "fltrust":
        root = sample_iid(train, spec.root_size, derive_rng(cfg.seed, "defense", 0))
        return FLTrustDefense(root, fl.I, fl.b, fl.alpha, fl.local_optimizer)
    if spec.kind == "flguard":
        return FLGuardDefense(cfg.flguard, fl.k, cfg.seed)
    raise ConfigurationError(f"Unknown defense '{spec.kind}'")


def run_config(
    cfg: ExperimentConfig,
    threads: int = Configuration.FLSIM_THREADS,
    record_timing: bool = Configuration.FLSIM_RECORD_TIMING,
    show_progress: bool = Configuration.FLSIM_PROGRESS,
) -> ExperimentReport:
    corpus = load_corpus(cfg)
    part = PartitionConfig(
        n_clients=cfg.fl.N,
        q=cfg.dataset.concentration(corpus.train.n_classes),
        seed=derive_seed(cfg.seed, "partition"),
    )
    clients = partition(corpus.train, part)
    arch = build_architecture(
        corpus.train.dim, cfg.model.hidden, corpus.train.n_classes, alpha=cfg.model.alpha
    )
    model = init_model(arch, derive_rng(cfg.seed, "init"))

    malicious = draw_malicious(cfg)
    attack = AttackService(cfg.attack, cfg.fl, cfg.seed)
    clients = attack.poison_clients(clients, malicious, arch)
    defense = build_defense(cfg, corpus.train)

    trainer = FederatedTrainer(
        cfg.fl,
        clients,
        corpus.test,
        attack,
        defense,
        malicious,
        cfg.seed,
        threads=threads,
        record_timing=record_timing,
    )
    return run_experiment(trainer, model, cfg.model_dump(mode="json"), show_progress)


def report_frame(report: ExperimentReport) -> pd.DataFrame:
    return pd.DataFrame(report.csv_rows(), columns=CSV_COLUMNS)


def write_report(report: ExperimentReport, directory: str, name: str, fmt: str) -> list[Path]:
    """Write `<name>.csv` and/or `<name>.json` under `directory`."""
    out = Path(directory)
    written = []
    if fmt in ("csv", "both"):
        written.append(write_csv(report_frame(report), out / f"{name}.csv"))
    if fmt in ("json", "both"):
        path = out / f"{name}.json"
        save_json_to_file(report.json_payload(), path)
        written.append(path)
    for path in written:
        logger.info(f"Report written: {path}")
    return written


def apply_axis(cfg: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    """Copy of `cfg` with one sweep axis changed, re-validated."""
    raw: dict[str, Any] = cfg.model_dump(mode="json", by_alias=True)
    if axis == "malicious_fraction":
        raw["fl"]["M"] = int(round(value * cfg.fl.N))
    elif axis == "q":
        raw["dataset"]["q"] = float(value)
    elif axis == "k":
        if float(value) != int(value):
            raise ConfigurationError(f"k must be an integer, got {value}")
        raw["fl"]["k"] = int(value)
    else:
        raise ConfigurationError(f"Unknown sweep axis '{axis}'; expected one of {', '.join(SWEEP_AXES)}")
    return ExperimentConfig.model_validate(raw)


def run_sweep(
    cfg: ExperimentConfig,
    axis: str,
    values: list[float],
    threads: int = Configuration.FLSIM_THREADS,
    record_timing: bool = Configuration.FLSIM_RECORD_TIMING,
    show_progress: bool = Configuration.FLSIM_PROGRESS,
) -> tuple[pd.DataFrame, list[ExperimentReport]]:
    """One experiment per value; the combined frame carries the axis value as its first column."""
    if not values:
        raise ConfigurationError("Sweep needs at least one value")
    if axis not in SWEEP_AXES:
        raise ConfigurationError(f"Unknown sweep axis '{axis}'; expected one of {', '.join(SWEEP_AXES)}")
    sub_configs = [apply_axis(cfg, axis, v) for v in values]

    frames, reports = [], []
    for value, sub in zip(values, sub_configs):
        logger.info(f"Sweep {axis}={value}")
        report = run_config(sub, threads, record_timing, show_progress)
        frame = report_frame(report)
        frame.insert(0, axis, value)
        frames.append(frame)
        reports.append(report)
    return pd.concat(frames, ignore_index=True), reports


def summarize(values: list[float], reports: list[ExperimentReport]) -> list[dict[str, Any]]:
    return [
        {
            "value": value,
            "final_accuracy": r.final_accuracy,
            "tail_mean_accuracy": r.tail_mean_accuracy,
            "tail_std_accuracy": r.tail_std_accuracy,
            "training_events": r.training_events,
            "mean_f1": float(np.mean([x.f1 for x in r.rounds])) if r.rounds else 1.0,
        }
        for value, r in zip(values, reports)
    ]
