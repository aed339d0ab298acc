"""
Contrastive representation model for client updates.

The encoder f(.) and the projection head g(.) are both linear -> leaky-ReLU -> linear stacks of
constant width. Training minimizes NT-Xent on g(f(view)) over pairs of augmented views; only the
encoder is used at inference.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from nn.network import (
    LayerSpec,
    ModelParameters,
    flatten,
    forward,
    forward_backward,
    init_model,
    unflatten,
)
from nn.optim import AdamState, adam_update
from utils.errors import DegenerateInputError, InsufficientRowsError

logger = logging.getLogger(__name__)

_NORM_EPS = 1e-12


def stack_architecture(width: int, alpha: float = 0.01) -> tuple[LayerSpec, LayerSpec]:
    return (
        LayerSpec(width, width, "leaky_relu", alpha),
        LayerSpec(width, width, "linear", alpha),
    )


@dataclass
class ContrastiveModel:
    encoder: ModelParameters
    head: Optional[ModelParameters] = None  # dropped once training ends

    @property
    def width(self) -> int:
        return self.encoder.input_dim

    def composite(self) -> ModelParameters:
        if self.head is None:
            raise DegenerateInputError("Projection head was discarded after training")
        return ModelParameters(list(self.encoder.layers) + list(self.head.layers))


def init_contrastive_model(width: int, rng: np.random.Generator) -> ContrastiveModel:
    arch = stack_architecture(width)
    return ContrastiveModel(encoder=init_model(arch, rng), head=init_model(arch, rng))


def augment(
    row: np.ndarray, noise_var: float, mask_ratio: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Two independent views; each coordinate gets N(0, noise_var) noise with prob mask_ratio."""
    row = np.asarray(row, dtype=np.float64)
    std = np.sqrt(noise_var)

    def view() -> np.ndarray:
        mask = rng.random(row.shape) < mask_ratio
        noise = rng.normal(0.0, std, size=row.shape)
        return row + np.where(mask, noise, 0.0)

    first = view()
    return first, view()


def pair_counts(batch: int) -> tuple[int, int]:
    """(positive pairs, negative pairs) seen by one NT-Xent batch of `batch` rows."""
    return batch, 2 * batch * (batch - 1)


def _normalized(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.maximum(np.linalg.norm(z, axis=1, keepdims=True), _NORM_EPS)
    return z / norms, norms


def _check_pairs(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    n = z.shape[0]
    if n % 2:
        raise DegenerateInputError(f"NT-Xent needs an even number of rows, got {n}")
    if n < 4:
        raise DegenerateInputError("NT-Xent needs B >= 2 (no negatives otherwise)")
    return z


def nt_xent_with_grad(z: np.ndarray, tau: float) -> tuple[float, np.ndarray]:
    """NT-Xent loss over 2B rows where (2i, 2i+1) are positive pairs, and dLoss/dZ.

    Cosine similarities are divided by tau; every row's denominator runs over the other
    2B - 1 rows. The loss averages the 2B directional terms.
    """
    z = _check_pairs(z)
    n = z.shape[0]
    zn, norms = _normalized(z)
    sim = (zn @ zn.T) / tau
    np.fill_diagonal(sim, -np.inf)
    positive = np.arange(n) ^ 1
    rows = np.arange(n)

    log_denominator = logsumexp(sim, axis=1)
    loss = float((log_denominator - sim[rows, positive]).mean())

    grad_sim = np.exp(sim - log_denominator[:, None])
    grad_sim[rows, positive] -= 1.0
    grad_sim /= n
    grad_zn = (grad_sim + grad_sim.T) @ zn / tau
    radial = (grad_zn * zn).sum(axis=1, keepdims=True)
    grad_z = (grad_zn - zn * radial) / norms
    return loss, grad_z


def nt_xent(z: np.ndarray, tau: float) -> float:
    return nt_xent_with_grad(z, tau)[0]


def interleave(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Stack two view matrices so rows (2i, 2i+1) are the two views of sample i."""
    out = np.empty((2 * first.shape[0], first.shape[1]))
    out[0::2] = first
    out[1::2] = second
    return out


def composite_loss_and_grad(
    composite: ModelParameters,
    views: np.ndarray,
    tau: float,
    out: Optional[np.ndarray] = None,
) -> tuple[float, np.ndarray]:
    """Loss of NT-Xent on head(encoder(views)) and its flat parameter gradient."""
    return forward_backward(composite, views, lambda z: nt_xent_with_grad(z, tau), out)


def fit_contrastive(
    model: ContrastiveModel,
    rows: np.ndarray,
    *,
    tau: float,
    noise_var: float,
    mask_ratio: float,
    lr: float,
    epochs: int,
    batch: int,
    rng: np.random.Generator,
) -> tuple[ContrastiveModel, list[float]]:
    """Adam over shuffled mini-batches; returns the encoder-only model and per-epoch mean losses.

    Every step sees exactly `batch` rows; the remainder of each shuffle is left out.
    """
    n = rows.shape[0]
    if n < batch:
        raise InsufficientRowsError(f"Contrastive training needs at least {batch} rows, got {n}")
    composite = model.composite()
    arch = composite.architecture
    theta = flatten(composite).copy()
    params = unflatten(theta, arch)
    grad = np.empty_like(theta)
    state = AdamState.zeros(theta.size, lr=lr)
    epoch_losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n - batch + 1, batch):
            idx = order[start : start + batch]
            first, second = augment(rows[idx], noise_var, mask_ratio, rng)
            loss, _ = composite_loss_and_grad(params, interleave(first, second), tau, out=grad)
            theta, state = adam_update(state, theta, grad, inplace=True)
            losses.append(loss)
        epoch_losses.append(float(np.mean(losses)))

    trained = params.copy()
    encoder = ModelParameters(trained.layers[: len(model.encoder.layers)])
    return ContrastiveModel(encoder=encoder), epoch_losses


def encode(model: ContrastiveModel, rows: np.ndarray) -> np.ndarray:
    """Representations f(rows); the head is never applied."""
    return forward(model.encoder, rows)
