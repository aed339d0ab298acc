import numpy as np
import pytest

from nn.network import (
    LayerSpec,
    backward,
    backward_cross_entropy,
    build_architecture,
    flatten,
    forward,
    forward_backward,
    init_model,
    parameter_count,
    predict,
    unflatten,
)
from nn.optim import AdamState, adam_update, sgd_step
from nn.training import fit_classifier, local_update
from utils.errors import ConfigurationError, EmptyClientDataError, InputError


def _relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


def test_parameter_count_and_flat_layout():
    arch = build_architecture(16, [32], 4)
    assert parameter_count(arch) == 16 * 32 + 32 + 32 * 4 + 4
    model = init_model(arch, np.random.default_rng(0))
    flat = flatten(model)
    assert flat.shape == (parameter_count(arch),)
    # first layer weight row-major, then its bias
    assert np.array_equal(flat[: 16 * 32], model.layers[0].weight.ravel())
    rebuilt = unflatten(flat, arch)
    assert np.array_equal(flatten(rebuilt), flat)


def test_unflatten_rejects_wrong_length():
    arch = build_architecture(3, [], 2)
    with pytest.raises(InputError):
        unflatten(np.zeros(parameter_count(arch) + 1), arch)


def test_architecture_must_chain():
    with pytest.raises(ConfigurationError):
        from nn.network import check_architecture

        check_architecture((LayerSpec(3, 4), LayerSpec(5, 2)))


def test_forward_dimension_mismatch():
    model = init_model(build_architecture(3, [4], 2), np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        forward(model, np.zeros((2, 5)))


def test_softmax_rows_sum_to_one(rng):
    model = init_model(build_architecture(5, [7], 3), rng)
    probs = forward(model, rng.normal(size=(6, 5)))
    assert np.allclose(probs.sum(axis=1), 1.0)


STACKS = {
    "linear": lambda: build_architecture(4, [], 3, output_activation="linear"),
    "leaky_hidden": lambda: build_architecture(4, [5, 3], 3, output_activation="linear"),
    "softmax_head": lambda: build_architecture(4, [5], 3),
}


def _numeric_gradient(loss, theta, eps=1e-6):
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        plus, minus = theta.copy(), theta.copy()
        plus[i] += eps
        minus[i] -= eps
        numeric[i] = (loss(plus) - loss(minus)) / (2 * eps)
    return numeric


@pytest.mark.parametrize("stack", sorted(STACKS))
@pytest.mark.parametrize("draw", range(100))
def test_cross_entropy_gradient_matches_finite_differences(stack, draw):
    rng = np.random.default_rng(100 + draw)
    arch = STACKS[stack]()
    model = init_model(arch, rng)
    x = rng.normal(size=(6, 4))
    y = rng.integers(0, 3, size=6)
    _, grad = backward_cross_entropy(model, x, y)

    numeric = _numeric_gradient(
        lambda theta: backward_cross_entropy(unflatten(theta, arch), x, y)[0], flatten(model).copy()
    )
    assert _relative_error(grad, numeric) <= 1e-4


@pytest.mark.parametrize("stack", ["linear", "leaky_hidden"])
@pytest.mark.parametrize("draw", range(100))
def test_backward_vector_jacobian_product(stack, draw):
    rng = np.random.default_rng(500 + draw)
    arch = STACKS[stack]()
    model = init_model(arch, rng)
    x = rng.normal(size=(5, 4))
    upstream = rng.normal(size=(5, 3))
    grad, grad_x = backward(model, x, upstream)

    numeric = _numeric_gradient(
        lambda theta: (forward(unflatten(theta, arch), x) * upstream).sum(), flatten(model).copy()
    )
    assert _relative_error(grad, numeric) <= 1e-4
    numeric_x = _numeric_gradient(
        lambda flat_x: (forward(model, flat_x.reshape(x.shape)) * upstream).sum(), x.ravel().copy()
    )
    assert _relative_error(grad_x.ravel(), numeric_x) <= 1e-4


def test_forward_backward_matches_backward(rng):
    arch = STACKS["leaky_hidden"]()
    model = init_model(arch, rng)
    x = rng.normal(size=(7, 4))
    upstream = rng.normal(size=(7, 3))
    expected, _ = backward(model, x, upstream)

    buffer = np.full(parameter_count(arch), np.nan)
    loss, grad = forward_backward(model, x, lambda out: (float((out * upstream).sum()), upstream), buffer)
    assert grad is buffer
    assert np.allclose(grad, expected, atol=1e-12)
    assert loss == pytest.approx(float((forward(model, x) * upstream).sum()))
    with pytest.raises(InputError):
        forward_backward(model, x, lambda out: (0.0, upstream), np.empty(3))
    with pytest.raises(ConfigurationError):
        forward_backward(init_model(STACKS["softmax_head"](), rng), x, lambda out: (0.0, out))


def test_backward_rejects_softmax_head(rng):
    model = init_model(build_architecture(3, [], 2), rng)
    with pytest.raises(ConfigurationError):
        backward(model, np.zeros((1, 3)), np.zeros((1, 2)))


def test_labels_out_of_range(rng):
    model = init_model(build_architecture(3, [], 2), rng)
    with pytest.raises(InputError):
        backward_cross_entropy(model, np.zeros((2, 3)), np.array([0, 2]))


def test_predict_ties_go_to_lowest_class():
    arch = build_architecture(2, [], 3)
    model = unflatten(np.zeros(parameter_count(arch)), arch)
    assert predict(model, np.ones((4, 2))).tolist() == [0, 0, 0, 0]


def test_sgd_step_and_adam_move_against_gradient(rng):
    arch = build_architecture(2, [], 2)
    model = init_model(arch, rng)
    grad = np.ones(parameter_count(arch))
    stepped = sgd_step(model, grad, 0.1)
    assert np.allclose(flatten(stepped), flatten(model) - 0.1)

    state = AdamState.zeros(grad.size, lr=0.01)
    theta, state = adam_update(state, flatten(model), grad)
    # first bias-corrected Adam step moves every coordinate by ~lr
    assert np.allclose(flatten(model) - theta, 0.01, atol=1e-6)
    assert state.t == 1


def test_fit_classifier_reduces_loss():
    rng = np.random.default_rng(3)
    x = np.vstack([rng.normal(-1, 0.2, (40, 2)), rng.normal(1, 0.2, (40, 2))])
    y = np.repeat([0, 1], 40)
    model = init_model(build_architecture(2, [8], 2), rng)
    _, losses = fit_classifier(model, x, y, steps=200, lr=0.1, batch_size=16, rng=rng)
    assert np.mean(losses[-20:]) < np.mean(losses[:20])


def test_local_update_zero_iterations_and_zero_lr(rng):
    model = init_model(build_architecture(3, [4], 2), rng)
    x, y = rng.normal(size=(5, 3)), rng.integers(0, 2, 5)
    assert not local_update(model, 0, x, y, 2, 0.1, rng).any()
    assert not local_update(model, 3, x, y, 2, 0.0, rng).any()


def test_local_update_single_full_batch_step(rng):
    model = init_model(build_architecture(3, [4], 2), rng)
    x, y = rng.normal(size=(5, 3)), rng.integers(0, 2, 5)
    _, grad = backward_cross_entropy(model, x, y)
    delta = local_update(model, 1, x, y, 5, 0.05, np.random.default_rng(9))
    assert np.allclose(delta, -0.05 * grad, atol=1e-12)


def test_local_update_empty_client(rng):
    model = init_model(build_architecture(3, [], 2), rng)
    with pytest.raises(EmptyClientDataError):
        local_update(model, 1, np.zeros((0, 3)), np.zeros(0, dtype=int), 2, 0.1, rng)


def test_mnist_sized_parameter_count():
    assert parameter_count(build_architecture(784, [128], 10)) == 101_770


def test_uniform_logits_give_ln2():
    arch = build_architecture(3, [], 2)
    model = unflatten(np.zeros(parameter_count(arch)), arch)
    loss, _ = backward_cross_entropy(model, np.ones((4, 3)), np.array([0, 1, 0, 1]))
    assert loss == pytest.approx(np.log(2))


def test_zero_model_bias_gradient():
    arch = build_architecture(2, [], 2)
    model = unflatten(np.zeros(parameter_count(arch)), arch)
    model.layers[0].bias[:] = [0.5, -0.5]
    _, grad = backward_cross_entropy(model, np.zeros((1, 2)), np.array([1]))
    probs = np.exp([0.5, -0.5]) / np.exp([0.5, -0.5]).sum()
    assert np.allclose(grad[:4], 0.0)
    assert np.allclose(grad[4:], probs - [0.0, 1.0], atol=1e-12)


def test_sgd_step_arithmetic():
    arch = build_architecture(1, [], 1, output_activation="linear")
    model = unflatten(np.array([1.0, 1.0]), arch)
    assert flatten(sgd_step(model, np.array([2.0, -2.0]), 0.5)).tolist() == [0.0, 2.0]


def test_adam_recurrence():
    from nn.optim import adam_step

    arch = build_architecture(1, [], 1, output_activation="linear")
    params = unflatten(np.array([0.3, -0.2]), arch)
    state = AdamState.zeros(2, lr=0.1)
    unchanged, _ = adam_step(state, params, np.zeros(2))
    assert np.array_equal(flatten(unchanged), flatten(params))

    g = np.array([0.5, -2.0])
    theta, m, v = flatten(params).copy(), np.zeros(2), np.zeros(2)
    for t in (1, 2):
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        theta = theta - 0.1 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        params, state = adam_step(state, params, g)
    assert np.allclose(flatten(params), theta, atol=1e-12)
    assert state.t == 2


def test_full_batch_sgd_on_separable_data_never_increases_loss():
    rng = np.random.default_rng(17)
    x = np.vstack([rng.normal(-1.0, 0.2, (30, 2)), rng.normal(1.0, 0.2, (30, 2))])
    y = np.repeat([0, 1], 30)
    model = init_model(build_architecture(2, [], 2), rng)
    _, losses = fit_classifier(model, x, y, steps=100, lr=0.01, batch_size=60, rng=rng)
    assert len(losses) == 100
    assert all(later <= earlier + 1e-12 for earlier, later in zip(losses, losses[1:]))
    assert losses[-1] < losses[0]


def test_adam_inplace_matches_copying_update(rng):
    size = 3 * (1 << 15) + 7  # spans several blocks plus a ragged tail
    theta = rng.normal(size=size)
    grads = [rng.normal(size=size) for _ in range(3)]

    copied_theta, copied = theta.copy(), AdamState.zeros(size, lr=0.01)
    for g in grads:
        copied_theta, copied = adam_update(copied, copied_theta, g)

    owned_theta, owned = theta.copy(), AdamState.zeros(size, lr=0.01)
    moments = owned.m
    for g in grads:
        result, owned = adam_update(owned, owned_theta, g, inplace=True)
        assert result is owned_theta
    assert owned.m is moments and owned.t == 3
    assert np.array_equal(owned_theta, copied_theta)
    assert np.array_equal(owned.v, copied.v)


def test_adam_without_inplace_leaves_inputs_alone(rng):
    theta = rng.normal(size=10)
    state = AdamState.zeros(10, lr=0.1)
    snapshot = theta.copy()
    adam_update(state, theta, np.ones(10))
    assert np.array_equal(theta, snapshot)
    assert not state.m.any() and not state.v.any() and state.t == 0
