"""
Dense neural-network engine: parameters, forward pass, backpropagation, flat-vector views.

Weights are stored as (fan_in, fan_out) matrices so a layer computes ``x @ W + b``.
A flat parameter vector concatenates, layer by layer, ``W.ravel()`` (row-major) then ``b``.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from utils.errors import ConfigurationError, InputError

logger = logging.getLogger(__name__)

ACTIVATIONS = ("leaky_relu", "linear", "softmax_out")
DEFAULT_ALPHA = 0.01


@dataclass(frozen=True)
class LayerSpec:
    fan_in: int
    fan_out: int
    activation: str = "linear"
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"Unknown activation '{self.activation}'")
        if self.activation == "leaky_relu" and self.alpha <= 0:
            raise ConfigurationError("leaky_relu alpha must be > 0")
        if self.fan_in < 1 or self.fan_out < 1:
            raise ConfigurationError("Layer dimensions must be >= 1")

    @property
    def size(self) -> int:
        return self.fan_in * self.fan_out + self.fan_out


Architecture = tuple[LayerSpec, ...]


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "linear"
    alpha: float = DEFAULT_ALPHA

    @property
    def spec(self) -> LayerSpec:
        return LayerSpec(self.weight.shape[0], self.weight.shape[1], self.activation, self.alpha)


@dataclass
class ModelParameters:
    layers: list[Layer]

    @property
    def architecture(self) -> Architecture:
        return tuple(layer.spec for layer in self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[1]

    @property
    def size(self) -> int:
        return parameter_count(self.architecture)

    def copy(self) -> "ModelParameters":
        return ModelParameters(
            [Layer(l.weight.copy(), l.bias.copy(), l.activation, l.alpha) for l in self.layers]
        )


def build_architecture(
    input_dim: int,
    hidden: Sequence[int],
    output_dim: int,
    output_activation: str = "softmax_out",
    alpha: float = DEFAULT_ALPHA,
) -> Architecture:
    """Fully connected stack: leaky-ReLU hidden layers, then the output layer."""
    widths = [input_dim, *hidden, output_dim]
    specs = []
    for i in range(len(widths) - 1):
        last = i == len(widths) - 2
        specs.append(
            LayerSpec(widths[i], widths[i + 1], output_activation if last else "leaky_relu", alpha)
        )
    check_architecture(tuple(specs))
    return tuple(specs)


def check_architecture(arch: Architecture) -> None:
    if not arch:
        raise ConfigurationError("Architecture needs at least one layer")
    for prev, nxt in zip(arch, arch[1:]):
        if prev.fan_out != nxt.fan_in:
            raise ConfigurationError(
                f"Layer dimensions do not chain: {prev.fan_out} -> {nxt.fan_in}"
            )
    for spec in arch[:-1]:
        if spec.activation == "softmax_out":
            raise ConfigurationError("softmax_out is only valid on the final layer")


def parameter_count(arch: Architecture) -> int:
    return sum(spec.size for spec in arch)


def init_model(arch: Architecture, rng: np.random.Generator) -> ModelParameters:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases."""
    check_architecture(arch)
    layers = []
    for spec in arch:
        limit = np.sqrt(6.0 / (spec.fan_in + spec.fan_out))
        weight = rng.uniform(-limit, limit, size=(spec.fan_in, spec.fan_out))
        layers.append(Layer(weight, np.zeros(spec.fan_out), spec.activation, spec.alpha))
    return ModelParameters(layers)


def flatten(params: ModelParameters) -> np.ndarray:
    return np.concatenate(
        [np.concatenate([l.weight.ravel(), l.bias.ravel()]) for l in params.layers]
    ).astype(np.float64, copy=False)


def unflatten(vector: np.ndarray, arch: Architecture) -> ModelParameters:
    """Rebuild parameters from a flat vector. Layers are views into `vector`, not copies."""
    vector = np.asarray(vector, dtype=np.float64)
    expected = parameter_count(arch)
    if vector.ndim != 1 or vector.shape[0] != expected:
        raise InputError(
            f"Flat vector has length {vector.size}, architecture needs {expected}"
        )
    layers = []
    offset = 0
    for spec in arch:
        n_w = spec.fan_in * spec.fan_out
        weight = vector[offset : offset + n_w].reshape(spec.fan_in, spec.fan_out)
        offset += n_w
        bias = vector[offset : offset + spec.fan_out]
        offset += spec.fan_out
        layers.append(Layer(weight, bias, spec.activation, spec.alpha))
    return ModelParameters(layers)


def _activate(pre: np.ndarray, layer: Layer) -> np.ndarray:
    if layer.activation == "leaky_relu":
        return np.where(pre < 0, layer.alpha * pre, pre)
    if layer.activation == "softmax_out":
        return softmax(pre)
    return pre


def _activation_grad(pre: np.ndarray, layer: Layer) -> np.ndarray:
    if layer.activation == "leaky_relu":
        return np.where(pre < 0, layer.alpha, 1.0)
    return np.ones_like(pre)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _check_batch(model: ModelParameters, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ConfigurationError(
            f"Batch shape {batch.shape} does not match model input dimension {model.input_dim}"
        )
    return batch


def _forward_cache(model: ModelParameters, batch: np.ndarray):
    inputs, pres = [], []
    h = batch
    for layer in model.layers:
        inputs.append(h)
        pre = h @ layer.weight + layer.bias
        pres.append(pre)
        h = _activate(pre, layer)
    return inputs, pres, h


def forward(model: ModelParameters, batch: np.ndarray) -> np.ndarray:
    """Output of the network; probabilities when the last layer is softmax_out."""
    batch = _check_batch(model, batch)
    _, _, out = _forward_cache(model, batch)
    return out


def logits(model: ModelParameters, batch: np.ndarray) -> np.ndarray:
    """Final-layer scores before softmax (identical to forward for non-softmax heads)."""
    batch = _check_batch(model, batch)
    _, pres, out = _forward_cache(model, batch)
    return pres[-1] if model.layers[-1].activation == "softmax_out" else out


def _backprop(
    model: ModelParameters,
    inputs,
    pres,
    grad_out: np.ndarray,
    output_is_logits: bool,
    out: Optional[np.ndarray] = None,
    input_grad: bool = True,
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Flat parameter gradient and input gradient given dLoss/d(output).

    Layer gradients are written straight into `out` (allocated when None) in flat layout.
    """
    arch = model.architecture
    if out is None:
        out = np.empty(parameter_count(arch))
    elif out.shape != (parameter_count(arch),):
        raise InputError(f"Gradient buffer has shape {out.shape}, expected {(parameter_count(arch),)}")
    offsets = np.cumsum([0] + [spec.size for spec in arch])
    delta = grad_out
    for idx in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[idx]
        if not (output_is_logits and idx == len(model.layers) - 1):
            delta = delta * _activation_grad(pres[idx], layer)
        fan_in, fan_out = layer.weight.shape
        start = offsets[idx]
        grad_w = out[start : start + fan_in * fan_out].reshape(fan_in, fan_out)
        np.matmul(inputs[idx].T, delta, out=grad_w)
        np.sum(delta, axis=0, out=out[start + fan_in * fan_out : offsets[idx + 1]])
        if idx > 0 or input_grad:
            delta = delta @ layer.weight.T
    return out, (delta if input_grad else None)


def backward(
    model: ModelParameters, batch: np.ndarray, grad_output: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vector-Jacobian product for an arbitrary upstream gradient on forward(model, batch).

    The final layer must not be softmax_out; use backward_cross_entropy for classifiers.

    Returns:
        (flat parameter gradient, gradient w.r.t. the batch)
    """
    batch = _check_batch(model, batch)
    if model.layers[-1].activation == "softmax_out":
        raise ConfigurationError("backward() does not differentiate through softmax_out")
    inputs, pres, _ = _forward_cache(model, batch)
    return _backprop(model, inputs, pres, np.asarray(grad_output, dtype=np.float64), False)


def forward_backward(
    model: ModelParameters,
    batch: np.ndarray,
    loss_fn: Callable[[np.ndarray], tuple[float, np.ndarray]],
    out: Optional[np.ndarray] = None,
) -> tuple[float, np.ndarray]:
    """One forward pass, `loss_fn(output) -> (loss, dLoss/d(output))`, then backprop.

    No input gradient is formed. The final layer must not be softmax_out.
    """
    batch = _check_batch(model, batch)
    if model.layers[-1].activation == "softmax_out":
        raise ConfigurationError("forward_backward() does not differentiate through softmax_out")
    inputs, pres, output = _forward_cache(model, batch)
    loss, grad_output = loss_fn(output)
    flat, _ = _backprop(
        model, inputs, pres, np.asarray(grad_output, dtype=np.float64), False, out, input_grad=False
    )
    return loss, flat


def backward_cross_entropy(
    model: ModelParameters, batch: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy over the batch and its flat gradient.

    Args:
        model: network whose final layer yields class scores
        batch: (n, input_dim) features
        labels: n class indices in [0, n_classes)

    Returns:
        (loss, gradient of dimension d)

    Raises:
        InputError: label out of range or length mismatch
    """
    batch = _check_batch(model, batch)
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = model.output_dim
    if labels.shape != (batch.shape[0],):
        raise InputError(f"Expected {batch.shape[0]} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise InputError(f"Labels must lie in [0, {n_classes})")

    inputs, pres, out = _forward_cache(model, batch)
    softmax_head = model.layers[-1].activation == "softmax_out"
    scores = pres[-1] if softmax_head else out
    n = batch.shape[0]
    shifted = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    loss = float(-log_probs[np.arange(n), labels].mean())

    grad_scores = np.exp(log_probs)
    grad_scores[np.arange(n), labels] -= 1.0
    grad_scores /= n
    flat, _ = _backprop(model, inputs, pres, grad_scores, output_is_logits=softmax_head)
    return loss, flat


def predict(model: ModelParameters, batch: np.ndarray) -> np.ndarray:
    """Arg-max class per row; ties resolve to the lowest class index."""
    return np.argmax(logits(model, batch), axis=1)
