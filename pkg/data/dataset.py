"""
In-memory labelled dataset and simple splitting helpers.
"""

from dataclasses import dataclass

import numpy as np

from utils.errors import InputError


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, dim), values in [0, 1]
    labels: np.ndarray  # (n,), int64 class indices
    n_classes: int

    def __post_init__(self):
        if self.features.ndim != 2:
            raise InputError("Dataset features must be a 2-D matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise InputError(
                f"Dataset has {self.features.shape[0]} rows but {self.labels.size} labels"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise InputError(f"Labels must lie in [0, {self.n_classes})")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.n_classes)

    def with_labels(self, labels: np.ndarray) -> "Dataset":
        return Dataset(self.features, np.asarray(labels, dtype=np.int64), self.n_classes)


def make_dataset(features, labels, n_classes: int) -> Dataset:
    return Dataset(
        np.asarray(features, dtype=np.float64),
        np.asarray(labels, dtype=np.int64),
        int(n_classes),
    )


def concat(datasets: list[Dataset], n_classes: int) -> Dataset:
    if not datasets:
        raise InputError("Nothing to concatenate")
    return Dataset(
        np.concatenate([d.features for d in datasets]),
        np.concatenate([d.labels for d in datasets]),
        n_classes,
    )


def train_test_split(
    dataset: Dataset, test_fraction: float, rng: np.random.Generator
) -> tuple[Dataset, Dataset]:
    if not 0.0 < test_fraction < 1.0:
        raise InputError("test_fraction must lie in (0, 1)")
    order = rng.permutation(len(dataset))
    n_test = max(1, int(round(test_fraction * len(dataset))))
    return dataset.subset(np.sort(order[n_test:])), dataset.subset(np.sort(order[:n_test]))


def sample_iid(dataset: Dataset, size: int, rng: np.random.Generator) -> Dataset:
    """Uniform sample without replacement (with replacement if `size` exceeds the data)."""
    idx = rng.choice(len(dataset), size=size, replace=size > len(dataset))
    return dataset.subset(np.sort(idx))
