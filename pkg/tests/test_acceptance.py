"""
Desk-scale end-to-end properties. Minutes per test; run with `pytest -m slow`.
"""

import time

import numpy as np
import pytest

from flguard.filtering import filter_clients
from flguard.training import train_contrastive
from models.experiment import ExperimentConfig, FLGuardHyper
from services.experiment_service import run_config

pytestmark = pytest.mark.slow


def _config(**sections) -> ExperimentConfig:
    # small local steps keep every run on the rising part of its learning curve at round R
    raw = {
        "dataset": {"kind": "synthetic", "n_classes": 4, "dim": 16, "n_per_class": 250, "spread": 0.1},
        "model": {"hidden": [32]},
        "fl": {"R": 60, "N": 20, "M": 0, "k": 5, "alpha": 0.01, "I": 2},
        "seed": 2024,
    }
    for name, values in sections.items():
        raw.setdefault(name, {}).update(values)
    return ExperimentConfig.model_validate(raw)


def _run(cfg):
    return run_config(cfg, threads=4, record_timing=False, show_progress=False)


def _mean_f1_after_warmup(report, k):
    return float(np.mean([r.f1 for r in report.rounds if r.round >= 2 * k]))


def test_flguard_keeps_accuracy_without_attack():
    fed_avg = _run(_config())
    flguard = _run(_config(defense={"kind": "flguard"}))
    assert abs(flguard.final_accuracy - fed_avg.final_accuracy) <= 0.02


@pytest.mark.parametrize(
    "attack",
    [
        {"kind": "sf"},
        {"kind": "lie", "lie_z": 1.5},
        {"kind": "min_max", "perturbation": "sgn"},
        {"kind": "slf"},
    ],
)
def test_flguard_filters_poisoned_updates(attack):
    baseline = _run(_config())
    report = _run(_config(fl={"M": 4}, attack=attack, defense={"kind": "flguard"}))
    assert _mean_f1_after_warmup(report, 5) >= 0.90
    assert baseline.final_accuracy - report.final_accuracy <= 0.03


def test_undefended_sign_flip_degrades():
    baseline = _run(_config())
    report = _run(_config(fl={"M": 4}, attack={"kind": "sf"}))
    assert baseline.final_accuracy - report.final_accuracy >= 0.10


@pytest.mark.parametrize("q", [0.25, 0.5])
def test_non_iid_sign_flip(q):
    iid = _run(_config(fl={"M": 4}, attack={"kind": "sf"}, defense={"kind": "flguard"}))
    skewed = _run(
        _config(fl={"M": 4}, attack={"kind": "sf"}, defense={"kind": "flguard"}, dataset={"q": q})
    )
    assert iid.final_accuracy - skewed.final_accuracy <= 0.05


def test_refresh_and_filter_cost():
    rng = np.random.default_rng(0)
    window = rng.normal(0, 0.01, size=(100, 3072))

    started = time.perf_counter()
    assets = train_contrastive(window, FLGuardHyper(), rng, trained_at_round=5)
    assert time.perf_counter() - started < 30.0

    started = time.perf_counter()
    filter_clients(window[:20], assets)
    assert time.perf_counter() - started < 0.1
