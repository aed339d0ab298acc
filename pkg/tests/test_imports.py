"""
Smoke check that every package imports and the environment settings validate.
"""

import importlib

import pytest

MODULES = [
    "properties.config",
    "utils.errors",
    "utils.rng",
    "utils.common",
    "utils.config_loader",
    "utils.file_validation",
    "utils.oracles",
    "nn.network",
    "nn.optim",
    "nn.training",
    "data.idx",
    "data.synthetic",
    "data.partition",
    "data.label_flip",
    "attacks.perturbation",
    "attacks.search",
    "attacks.model_poisoning",
    "defenses.aggregators",
    "defenses.base",
    "flguard.preprocessing",
    "flguard.contrastive",
    "flguard.assets",
    "flguard.filtering",
    "flguard.training",
    "flguard.defense",
    "services.metrics_service",
    "services.attack_service",
    "services.federation_service",
    "services.experiment_service",
    "middleware.error_handler",
    "models.experiment",
    "models.report",
    "models.responses",
    "main",
]


@pytest.mark.parametrize("name", MODULES)
def test_imports(name):
    importlib.import_module(name)


def test_configuration():
    from properties.config import Configuration

    assert Configuration.validate_required_config()
    assert Configuration.FLSIM_THREADS >= 1
    assert Configuration.FLSIM_FORMAT in Configuration.REPORT_FORMATS
