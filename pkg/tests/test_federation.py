import logging

import numpy as np
import pytest

from attacks.model_poisoning import Crafted
from data.dataset import make_dataset
from defenses.base import FedAvgDefense, RoundContext, TrimmedMeanDefense
from models.experiment import AttackSpec, FLConfig, ThreatModelConfig
from nn.network import build_architecture, flatten, init_model
from services import experiment_service
from services.attack_service import AttackService
from services.federation_service import (
    FederatedTrainer,
    apply_global_update,
    local_update,
    run_experiment,
)
from utils.errors import ConfigurationError
from utils.oracles import trimmed_mean_oracle
from utils.rng import derive_rng


def _clients(rng, n, rows=6, dim=3):
    return [make_dataset(rng.random((rows, dim)), rng.integers(0, 2, rows), 2) for _ in range(n)]


def _trainer(rng, fl, clients, defense, attack=None, malicious=(), seed=5, threads=1):
    attack = attack or AttackService(AttackSpec(), fl, seed)
    test = make_dataset(rng.random((10, 3)), rng.integers(0, 2, 10), 2)
    return FederatedTrainer(
        fl, clients, test, attack, defense, list(malicious), seed, threads=threads, record_timing=False
    )


def _model(rng):
    return init_model(build_architecture(3, [4], 2), rng)


def test_apply_global_update(rng):
    model = _model(rng)
    g = rng.normal(size=flatten(model).size)
    assert np.array_equal(flatten(apply_global_update(model, np.zeros_like(g), 1.0)), flatten(model))
    assert np.allclose(flatten(apply_global_update(model, g, 0.5)), flatten(model) + 0.5 * g)
    with pytest.raises(ConfigurationError):
        apply_global_update(model, g[:-1], 1.0)


def test_round_matches_hand_composed_fed_avg(rng):
    fl = FLConfig(R=1, N=2, M=0, I=2, b=3, alpha=0.1, k=1)
    clients = _clients(rng, 2)
    model = _model(rng)
    trainer = _trainer(rng, fl, clients, FedAvgDefense())

    state, report = trainer.run_round(trainer.initial_state(model))

    deltas = [
        local_update(model, 2, c.features, c.labels, 3, 0.1, derive_rng(5, "client", 1, cid))
        for cid, c in enumerate(clients)
    ]
    expected = flatten(model) + np.mean(deltas, axis=0)
    assert np.allclose(flatten(state.model), expected, atol=1e-12)
    assert report.round == 1 and report.selected == [0, 1]
    assert not report.f1_defined and report.f1 == 1.0
    assert report.wall_ms == 0.0


def test_sign_flip_through_trimmed_mean(rng):
    fl = FLConfig(R=1, N=5, M=1, I=1, b=6, alpha=0.1, k=1)
    clients = _clients(rng, 5)
    model = _model(rng)
    attack = AttackService(AttackSpec(kind="sf"), fl, 5)
    trainer = _trainer(rng, fl, clients, TrimmedMeanDefense(1), attack=attack, malicious=[4])

    honest = trainer.honest_updates(model, 1, list(range(5)))
    matrix = [honest[c].tolist() for c in range(4)] + [(-honest[4]).tolist()]
    state, report = trainer.run_round(trainer.initial_state(model))

    aggregate = flatten(state.model) - flatten(model)
    assert np.allclose(aggregate, trimmed_mean_oracle(matrix, 1), atol=1e-12)
    assert report.n_malicious == 1 and report.tp + report.fn == 1


def test_empty_clients_are_skipped(rng, caplog):
    fl = FLConfig(R=1, N=3, M=0, I=1, b=3, alpha=0.1, k=1)
    clients = _clients(rng, 2) + [make_dataset(np.zeros((0, 3)), np.zeros(0, dtype=int), 2)]
    trainer = _trainer(rng, fl, clients, FedAvgDefense())
    with caplog.at_level(logging.WARNING):
        _, report = trainer.run_round(trainer.initial_state(_model(rng)))
    assert report.n_participants == 2 and report.selected == [0, 1]
    assert "no data" in caplog.text


def test_participation_sampling(rng):
    fl = FLConfig(R=1, N=6, M=0, P=3, I=1, b=3, alpha=0.1, k=1)
    trainer = _trainer(rng, fl, _clients(rng, 6), FedAvgDefense())
    sampled = trainer.sample_participants(4)
    assert len(sampled) == 3 and sampled == sorted(set(sampled))
    assert sampled == trainer.sample_participants(4)


def test_zero_rounds_reports_initial_accuracy(rng):
    fl = FLConfig(R=0, N=2, M=0, I=1, b=3, alpha=0.1, k=1)
    trainer = _trainer(rng, fl, _clients(rng, 2), FedAvgDefense())
    report = run_experiment(trainer, _model(rng), {}, show_progress=False)
    assert report.rounds == []
    assert report.final_accuracy == report.initial_accuracy


def _run(cfg, threads=1):
    return experiment_service.run_config(cfg, threads=threads, record_timing=False, show_progress=False)


def test_flguard_cold_start_equals_fed_avg(make_config):
    flguard = _run(make_config(fl={"k": 5}, defense={"kind": "flguard"}))
    fed_avg = _run(make_config(fl={"k": 5}))
    assert flguard.training_events == 0
    assert [r.acc for r in flguard.rounds] == [r.acc for r in fed_avg.rounds]
    assert all(r.n_selected == 8 for r in flguard.rounds)


def test_flguard_trains_every_k_rounds(make_config):
    report = _run(make_config(fl={"R": 10, "k": 5}, defense={"kind": "flguard"}))
    assert report.training_events == 2
    assert len(report.rounds) == 10
    assert set(report.contrastive_losses) == {"lv", "rd"}
    assert len(report.contrastive_losses["lv"]) == 1


def test_flguard_trains_on_last_k_matrices(make_config, monkeypatch):
    from flguard import defense as flguard_defense

    windows = []
    real = flguard_defense.train_contrastive

    def recording(window, hyper, rng, trained_at_round=0):
        windows.append((trained_at_round, window.shape))
        return real(window, hyper, rng, trained_at_round)

    monkeypatch.setattr(flguard_defense, "train_contrastive", recording)
    _run(make_config(fl={"R": 4, "k": 2}, defense={"kind": "flguard"}))
    assert [w[0] for w in windows] == [2, 4]
    assert all(shape[0] == 16 for _, shape in windows)


def test_runs_are_deterministic(make_config):
    cfg = make_config(fl={"M": 2}, attack={"kind": "lie"}, defense={"kind": "multi_krum", "M": 1})
    first = _run(cfg)
    again = _run(cfg)
    threaded = _run(cfg, threads=3)
    assert first.csv_rows() == again.csv_rows() == threaded.csv_rows()


def test_malicious_counts_are_consistent(make_config):
    report = _run(make_config(fl={"M": 2, "P": 6}, attack={"kind": "sf"}, defense={"kind": "flguard"}))
    for r in report.rounds:
        assert r.n_participants == 6
        assert r.n_malicious <= 2 and r.tp + r.fn == r.n_malicious
        assert r.tp + r.fp + r.tn + r.fn == 6


def test_data_poisoning_runs(make_config):
    report = _run(make_config(fl={"M": 2}, attack={"kind": "slf"}))
    assert len(report.rounds) == 3
    assert all(not r.attack_skipped for r in report.rounds)


@pytest.mark.parametrize(
    "threat, expected",
    [("T1", [1000, 1001, 1002, 1003]), ("T2", [1004, 1005]), ("T3", [1000, 1001, 1002, 1003]), ("T4", [1004, 1005])],
)
def test_attack_sees_only_rows_its_threat_model_reveals(monkeypatch, threat, expected):
    honest = {c: np.full(4, 1000.0 + c) for c in range(6)}
    seen = []

    def spy(rows, z):
        seen.append(rows.copy())
        return Crafted(rows.mean(axis=0))

    monkeypatch.setattr("services.attack_service.lie_attack", spy)
    fl = FLConfig(R=1, N=6, M=2, I=1, b=3, alpha=0.1, k=1)
    service = AttackService(AttackSpec(kind="lie", threat=ThreatModelConfig(type=threat)), fl, 5)
    outcome = service.craft(honest, [0, 1, 2, 3], [4, 5], FedAvgDefense(), RoundContext(1, None, 0))

    assert len(seen) == 1
    assert seen[0][:, 0].tolist() == expected
    assert sorted(outcome.updates) == [4, 5]


def test_data_poisoning_threat_crafts_no_updates(monkeypatch):
    honest = {c: np.full(4, 1000.0 + c) for c in range(6)}
    calls = []
    monkeypatch.setattr("services.attack_service.lie_attack", lambda *a: calls.append(a))
    fl = FLConfig(R=1, N=6, M=2, I=1, b=3, alpha=0.1, k=1)
    service = AttackService(AttackSpec(kind="slf"), fl, 5)
    assert service.spec.threat_type == "T5"
    outcome = service.craft(honest, [0, 1, 2, 3], [4, 5], FedAvgDefense(), RoundContext(1, None, 0))
    assert outcome.updates == {} and not outcome.skipped
    assert calls == []
