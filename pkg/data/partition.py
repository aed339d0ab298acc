"""
Client partitioning with label-concentration parameter q.

Clients are split into n groups (n = number of classes). A sample of label K goes to group K
with probability q and to each other group with probability (1 - q) / (n - 1); inside a group
it goes to a uniformly chosen client. q = 1/n gives IID clients.
"""

import logging

import numpy as np

from data.dataset import Dataset
from models.experiment import PartitionConfig
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


def client_groups(n_clients: int, n_groups: int) -> np.ndarray:
    """Group id per client: contiguous blocks of N // n clients, remainder joins the last group."""
    if n_clients < n_groups:
        raise ConfigurationError(
            f"Cannot form {n_groups} groups from {n_clients} clients (need N >= number of classes)"
        )
    per_group = n_clients // n_groups
    return np.minimum(np.arange(n_clients) // per_group, n_groups - 1)


def sample_groups(
    labels: np.ndarray, n_groups: int, q: float, rng: np.random.Generator
) -> np.ndarray:
    """Destination group per sample."""
    own = rng.random(labels.size) < q
    if n_groups == 1:
        return np.zeros(labels.size, dtype=np.int64)
    other = rng.integers(0, n_groups - 1, size=labels.size)
    other = other + (other >= labels)
    return np.where(own, labels, other).astype(np.int64)


def partition(dataset: Dataset, cfg: PartitionConfig) -> list[Dataset]:
    """Split `dataset` across cfg.n_clients clients; disjoint, order preserved within a client."""
    n_groups = dataset.n_classes
    groups_of_client = client_groups(cfg.n_clients, n_groups)
    rng = np.random.default_rng(cfg.seed)

    group = sample_groups(dataset.labels, n_groups, cfg.q, rng)
    members = [np.flatnonzero(groups_of_client == g) for g in range(n_groups)]
    sizes = np.array([m.size for m in members])
    slot = np.floor(rng.random(group.size) * sizes[group]).astype(np.int64)
    owner = np.array([members[g][s] for g, s in zip(group, slot)], dtype=np.int64)

    clients = [dataset.subset(np.flatnonzero(owner == c)) for c in range(cfg.n_clients)]
    empty = [c for c, d in enumerate(clients) if len(d) == 0]
    if empty:
        logger.warning(f"Partition left {len(empty)} client(s) without data: {empty}")
    return clients
