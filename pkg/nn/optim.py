"""
Optimizers over flat parameter vectors.
"""

from dataclasses import dataclass, replace

import numpy as np

from nn.network import ModelParameters, flatten, unflatten
from utils.errors import InputError


def sgd_step(params: ModelParameters, grad: np.ndarray, lr: float) -> ModelParameters:
    """params - lr * grad, as a new ModelParameters."""
    flat = flatten(params)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != flat.shape:
        raise InputError(f"Gradient has shape {grad.shape}, parameters have {flat.shape}")
    return unflatten(flat - lr * grad, params.architecture)


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, size: int, lr: float = 0.001, **kwargs) -> "AdamState":
        return cls(m=np.zeros(size), v=np.zeros(size), t=0, lr=lr, **kwargs)


# Elements per Adam block; one block of m, v, theta and scratch stays cache-resident.
ADAM_BLOCK = 1 << 15


def _adam_block(m, v, theta, grad, scratch, beta1, beta2, step, eps) -> None:
    np.subtract(grad, m, out=scratch)
    scratch *= 1.0 - beta1
    m += scratch
    np.multiply(grad, grad, out=scratch)
    scratch -= v
    scratch *= 1.0 - beta2
    v += scratch
    np.sqrt(v, out=scratch)
    scratch += eps
    np.divide(m, scratch, out=scratch)
    scratch *= step
    theta -= scratch


def adam_update(
    state: AdamState, theta: np.ndarray, grad: np.ndarray, inplace: bool = False
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam step on a flat vector.

    With `inplace`, `theta` and the state's moment buffers are overwritten; otherwise
    fresh arrays are returned and the inputs are left untouched.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if not (state.m.shape == state.v.shape == theta.shape == grad.shape):
        raise InputError("Adam state, parameters and gradient must have the same length")
    if inplace:
        m, v = state.m, state.v
    else:
        theta, m, v = np.array(theta, dtype=np.float64), state.m.copy(), state.v.copy()
    t = state.t + 1
    correction1 = 1.0 - state.beta1**t
    correction2 = np.sqrt(1.0 - state.beta2**t)
    # lr * m_hat / (sqrt(v_hat) + eps) rewritten over the raw moments
    step = state.lr * correction2 / correction1
    eps = state.eps * correction2
    scratch = np.empty(min(ADAM_BLOCK, theta.size))
    for lo in range(0, theta.size, ADAM_BLOCK):
        hi = min(lo + ADAM_BLOCK, theta.size)
        _adam_block(
            m[lo:hi], v[lo:hi], theta[lo:hi], grad[lo:hi], scratch[: hi - lo],
            state.beta1, state.beta2, step, eps,
        )
    return theta, replace(state, m=m, v=v, t=t)


def adam_step(
    state: AdamState, params: ModelParameters, grad: np.ndarray
) -> tuple[ModelParameters, AdamState]:
    theta, state = adam_update(state, flatten(params), grad)
    return unflatten(theta, params.architecture), state
