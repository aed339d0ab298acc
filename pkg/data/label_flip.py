"""
Data-poisoning transforms: static and surrogate-driven label flips.
"""

import numpy as np

from data.dataset import Dataset
from nn.network import ModelParameters, forward
from utils.errors import ConfigurationError


def static_label_flip(dataset: Dataset) -> Dataset:
    """Label c becomes n_classes - 1 - c."""
    return dataset.with_labels(dataset.n_classes - 1 - dataset.labels)


def dynamic_label_flip(dataset: Dataset, surrogate: ModelParameters) -> Dataset:
    """Each label becomes the surrogate's least probable class for that sample (lowest index on ties)."""
    if surrogate.output_dim != dataset.n_classes:
        raise ConfigurationError(
            f"Surrogate outputs {surrogate.output_dim} classes, dataset has {dataset.n_classes}"
        )
    if len(dataset) == 0:
        return dataset
    probs = forward(surrogate, dataset.features)
    return dataset.with_labels(np.argmin(probs, axis=1))
