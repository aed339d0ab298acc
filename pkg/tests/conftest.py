import numpy as np
import pytest

from models.experiment import ExperimentConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_config(**sections) -> ExperimentConfig:
    """Tiny synthetic experiment that runs in well under a second per round."""
    raw = {
        "dataset": {"kind": "synthetic", "n_classes": 4, "dim": 6, "n_per_class": 30},
        "model": {"hidden": [8]},
        "fl": {"R": 3, "N": 8, "M": 0, "I": 2, "b": 8, "alpha": 0.1, "k": 2},
        "flguard": {"feature_dim": 16, "batch": 8, "epochs": 1},
        "seed": 7,
    }
    for name, values in sections.items():
        raw.setdefault(name, {})
        if isinstance(values, dict):
            raw[name].update(values)
        else:
            raw[name] = values
    return ExperimentConfig.model_validate(raw)


@pytest.fixture
def make_config():
    return small_config
