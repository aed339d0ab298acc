"""
Mini-batch training for classifiers: client local updates and surrogate models.
"""

import logging

import numpy as np

from nn.network import ModelParameters, backward_cross_entropy, flatten, unflatten
from nn.optim import AdamState, adam_update
from utils.errors import EmptyClientDataError

logger = logging.getLogger(__name__)


def fit_classifier(
    model: ModelParameters,
    features: np.ndarray,
    labels: np.ndarray,
    steps: int,
    lr: float,
    batch_size: int,
    rng: np.random.Generator,
    optimizer: str = "sgd",
) -> tuple[ModelParameters, list[float]]:
    """Train `model` for `steps` mini-batch steps; returns the new model and per-step losses."""
    arch = model.architecture
    theta = flatten(model).copy()
    n = features.shape[0]
    state = AdamState.zeros(theta.size, lr=lr) if optimizer == "adam" else None
    losses = []
    for _ in range(steps):
        idx = rng.choice(n, size=batch_size, replace=batch_size > n)
        loss, grad = backward_cross_entropy(unflatten(theta, arch), features[idx], labels[idx])
        losses.append(loss)
        if state is None:
            theta = theta - lr * grad
        else:
            theta, state = adam_update(state, theta, grad, inplace=True)
    logger.debug(f"Classifier fit: {steps} steps, final loss {losses[-1] if losses else float('nan'):.4f}")
    return unflatten(theta, arch), losses


def local_update(
    model: ModelParameters,
    iterations: int,
    features: np.ndarray,
    labels: np.ndarray,
    batch_size: int,
    lr: float,
    rng: np.random.Generator,
    optimizer: str = "sgd",
) -> np.ndarray:
    """Client training as a delta: flat(w_I) - flat(w) after `iterations` mini-batch steps.

    Batches are drawn with replacement only when `batch_size` exceeds the client's data.
    """
    if features.shape[0] == 0:
        raise EmptyClientDataError("Client has no training samples")
    start = flatten(model)
    if iterations == 0:
        return np.zeros_like(start)
    trained, _ = fit_classifier(
        model, features, labels, iterations, lr, batch_size, rng, optimizer=optimizer
    )
    return flatten(trained) - start
