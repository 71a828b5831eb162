import numpy as np
import numpy.testing as npt
import pytest
from mpmath import mp

from batwatch.errors import ConfigError, ShapeError, TrainingError
from batwatch.nncore import (
    ADAM_EPS,
    DenseLayer,
    OptimizerState,
    backward,
    dense_forward,
    forward_network,
    glorot_layer,
    gradient_check,
    max_relative_deviation,
    mse,
    network_params,
    numeric_gradients,
    optimizer_step,
)

mp.dps = 30


def _random_net(sizes, activations, seed):
    rng = np.random.default_rng(seed)
    return [
        glorot_layer(sizes[i], sizes[i + 1], activations[i], rng)
        for i in range(len(sizes) - 1)
    ]


# ------------------------------------------------------------ dense_forward


def test_forward_identity_linear():
    layer = DenseLayer(weights=np.eye(2), bias=np.zeros(2), activation="linear")
    npt.assert_array_equal(dense_forward(layer, np.array([3.0, -1.0])), [3.0, -1.0])


def test_forward_zero_weights_sigmoid_is_half():
    layer = DenseLayer(weights=np.zeros((2, 2)), bias=np.zeros(2), activation="sigmoid")
    npt.assert_array_equal(dense_forward(layer, np.array([7.0, -4.0])), [0.5, 0.5])


def test_forward_tanh_matches_high_precision_value():
    # independent oracle: mpmath tanh(1)
    expected = float(mp.tanh(1))
    layer = DenseLayer(weights=np.array([[1.0, 1.0]]), bias=np.zeros(1), activation="tanh")
    npt.assert_allclose(dense_forward(layer, np.array([0.5, 0.5])), [expected], rtol=1e-15)


def test_forward_shape_mismatch():
    layer = DenseLayer(weights=np.eye(2), bias=np.zeros(2), activation="linear")
    with pytest.raises(ShapeError):
        dense_forward(layer, np.array([1.0, 2.0, 3.0]))


def test_forward_linear_homogeneity():
    rng = np.random.default_rng(11)
    layer = glorot_layer(5, 4, "linear", rng)
    layer.bias[:] = 0.0
    x = rng.normal(size=5)
    for alpha in (0.5, -2.0, 13.0):
        npt.assert_allclose(
            dense_forward(layer, alpha * x), alpha * dense_forward(layer, x), rtol=1e-12
        )


def test_forward_batch_rows_match_single_calls():
    rng = np.random.default_rng(3)
    layer = glorot_layer(4, 3, "tanh", rng)
    batch = rng.normal(size=(6, 4))
    out = dense_forward(layer, batch)
    for i in range(6):
        npt.assert_allclose(out[i], dense_forward(layer, batch[i]), rtol=1e-15)


# -------------------------------------------------------------------- mse


def test_mse_identical_is_zero():
    assert mse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0


def test_mse_unit_offsets():
    assert mse([0.0, 0.0], [1.0, 1.0]) == 1.0


def test_mse_hand_computed():
    # (1 + 0 + 4) / 3
    npt.assert_allclose(mse([1.0, 2.0, 4.0], [2.0, 2.0, 2.0]), 5.0 / 3.0, rtol=1e-15)


def test_mse_symmetry_exact():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = rng.normal(size=rng.integers(1, 20))
        b = rng.normal(size=a.size)
        assert mse(a, b) == mse(b, a)
        assert mse(a, a) == 0.0


def test_mse_errors():
    with pytest.raises(ShapeError):
        mse([1.0], [1.0, 2.0])
    with pytest.raises(ShapeError):
        mse([], [])


# ---------------------------------------------------------------- backward


def test_backward_zero_error_gives_zero_gradient():
    layer = DenseLayer(weights=np.array([[1.0]]), bias=np.zeros(1), activation="linear")
    grads = backward([layer], np.array([1.0]), np.array([1.0]))
    npt.assert_array_equal(grads["layer0.weight"], [[0.0]])
    npt.assert_array_equal(grads["layer0.bias"], [0.0])


def test_backward_hand_derived_linear():
    # y = w x, w=2, x=1, target=1, loss=(y-t)^2 -> d/dw = 2(2-1)*1 = 2
    layer = DenseLayer(weights=np.array([[2.0]]), bias=np.zeros(1), activation="linear")
    grads = backward([layer], np.array([1.0]), np.array([1.0]))
    npt.assert_allclose(grads["layer0.weight"], [[2.0]], rtol=1e-15)
    npt.assert_allclose(grads["layer0.bias"], [2.0], rtol=1e-15)


def test_backward_matches_testlocal_finite_differences():
    # independent oracle: plain loop over parameters, central differences
    net = _random_net([3, 4, 2], ["tanh", "sigmoid"], seed=7)
    rng = np.random.default_rng(8)
    x = rng.normal(size=3)
    t = rng.normal(size=2)
    grads = backward(net, x, t)
    h = 1e-5
    for name, p in network_params(net).items():
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            keep = p[idx]
            p[idx] = keep + h
            up = mse(forward_network(net, x), t)
            p[idx] = keep - h
            down = mse(forward_network(net, x), t)
            p[idx] = keep
            numeric = (up - down) / (2 * h)
            assert abs(grads[name][idx] - numeric) < 1e-7
            it.iternext()


def test_backward_shape_chain_violation():
    rng = np.random.default_rng(0)
    bad = [glorot_layer(3, 4, "tanh", rng), glorot_layer(5, 2, "linear", rng)]
    with pytest.raises(ShapeError):
        backward(bad, np.zeros(3), np.zeros(2))


# ----------------------------------------------------------- optimizer_step


def test_sgd_single_step():
    state = OptimizerState(kind="sgd", learning_rate=0.1)
    params = {"w": np.array([1.0])}
    optimizer_step(state, params, {"w": np.array([1.0])})
    npt.assert_allclose(params["w"], [0.9], rtol=1e-15)
    assert state.step == 1


def test_sgd_zero_gradient_keeps_params():
    state = OptimizerState(kind="sgd", learning_rate=0.1)
    params = {"w": np.array([1.0, -2.0])}
    optimizer_step(state, params, {"w": np.zeros(2)})
    npt.assert_array_equal(params["w"], [1.0, -2.0])


def test_adam_first_step_hand_evaluated():
    # t=1, g=1: m_hat = v_hat = 1, update = lr / (1 + eps)
    state = OptimizerState(kind="adam", learning_rate=0.001)
    params = {"w": np.array([1.0])}
    optimizer_step(state, params, {"w": np.array([1.0])})
    expected = 1.0 - 0.001 / (1.0 + ADAM_EPS)
    npt.assert_allclose(params["w"], [expected], rtol=1e-15)


def test_nonfinite_gradient_names_parameter():
    state = OptimizerState(kind="adam", learning_rate=0.001)
    params = {"layer3.bias": np.array([1.0])}
    with pytest.raises(TrainingError, match="layer3.bias"):
        optimizer_step(state, params, {"layer3.bias": np.array([np.nan])})


def test_sgd_decreases_quadratic_loss_below_curvature_limit():
    rng = np.random.default_rng(21)
    for _ in range(20):
        c = rng.uniform(0.5, 4.0)  # loss c*(x-t)^2, curvature 2c
        t = rng.normal()
        x = np.array([t + rng.uniform(1.0, 3.0) * rng.choice([-1.0, 1.0])])
        lr = 0.9 / (2 * c)
        state = OptimizerState(kind="sgd", learning_rate=lr)
        before = c * (x[0] - t) ** 2
        optimizer_step(state, {"x": x}, {"x": np.array([2 * c * (x[0] - t)])})
        after = c * (x[0] - t) ** 2
        assert after < before


def test_optimizer_rejects_bad_config():
    with pytest.raises(ConfigError):
        OptimizerState(kind="momentum")
    with pytest.raises(ConfigError):
        OptimizerState(kind="sgd", learning_rate=0.0)


# ----------------------------------------------------------- gradient_check


def test_gradient_check_linear_net_is_tight():
    layer = DenseLayer(weights=np.array([[1.3]]), bias=np.zeros(1), activation="linear")
    assert gradient_check([layer], np.array([0.7]), np.array([0.2])) < 1e-8


def test_gradient_check_three_layer_net():
    net = _random_net([10, 10, 10, 10], ["sigmoid", "tanh", "linear"], seed=13)
    rng = np.random.default_rng(14)
    x = rng.normal(size=10)
    t = rng.normal(size=10)
    assert gradient_check(net, x, t, step=1e-5) < 1e-6


def test_gradient_check_detects_corrupted_gradient():
    net = _random_net([4, 3, 4], ["tanh", "linear"], seed=17)
    rng = np.random.default_rng(18)
    x = rng.normal(size=4)
    t = rng.normal(size=4)
    analytic = backward(net, x, t)
    analytic["layer0.weight"] = analytic["layer0.weight"] + 0.1
    numeric = numeric_gradients(
        lambda: mse(forward_network(net, x), t), network_params(net), 1e-5
    )
    assert max_relative_deviation(analytic, numeric) > 1e-2


def test_seeded_networks_gradients_match_finite_differences():
    for seed in range(5):
        sizes = [6, 5, 3, 5, 6]
        net = _random_net(sizes, ["tanh", "linear", "sigmoid", "linear"], seed=seed)
        rng = np.random.default_rng(100 + seed)
        x = rng.normal(size=6)
        t = rng.normal(size=6)
        assert gradient_check(net, x, t, step=1e-5) < 1e-6


def test_glorot_is_deterministic():
    a = glorot_layer(7, 5, "tanh", np.random.default_rng(42))
    b = glorot_layer(7, 5, "tanh", np.random.default_rng(42))
    npt.assert_array_equal(a.weights, b.weights)


def test_layer_validation():
    with pytest.raises(ShapeError):
        DenseLayer(weights=np.zeros((2, 2)), bias=np.zeros(3), activation="linear")
    with pytest.raises(ConfigError):
        DenseLayer(weights=np.zeros((2, 2)), bias=np.zeros(2), activation="relu")
    with pytest.raises(ShapeError):
        DenseLayer(weights=np.full((2, 2), np.inf), bias=np.zeros(2), activation="linear")
