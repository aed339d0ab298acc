"""
Gaussian-blob classification data, the default desk-scale corpus.
"""

import numpy as np

from data.dataset import Dataset
from utils.errors import ConfigurationError


def synth_dataset(
    n_classes: int, dim: int, n_per_class: int, spread: float, seed: int
) -> Dataset:
    """One Gaussian blob per class around a uniform random mean in [0, 1]^dim.

    Samples are clamped to [0, 1] and interleaved by a seeded shuffle.
    """
    if n_classes < 2:
        raise ConfigurationError("synth_dataset needs at least 2 classes")
    if dim < 1 or n_per_class < 1 or spread < 0:
        raise ConfigurationError("dim and n_per_class must be >= 1, spread >= 0")
    rng = np.random.default_rng(seed)
    means = rng.uniform(0.0, 1.0, size=(n_classes, dim))
    labels = np.repeat(np.arange(n_classes, dtype=np.int64), n_per_class)
    noise = rng.normal(0.0, 1.0, size=(labels.size, dim))
    features = np.clip(means[labels] + spread * noise, 0.0, 1.0)
    order = rng.permutation(labels.size)
    return Dataset(features[order], labels[order], n_classes)
