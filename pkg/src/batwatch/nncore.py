"""Minimal dense-network kernel shared by both autoencoders.

Everything runs on float64 ndarrays: a "matrix" is a C-contiguous 2-D
array, a parameter set is a name-keyed dict of arrays.  Layers accept a
single vector or a batch (rows = examples); gradients are averaged over
the batch so the loss is the mean per-example MSE.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError, TrainingError

ACTIVATIONS = ("sigmoid", "tanh", "linear")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def sigmoid(x):
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _apply_activation(name, z):
    if name == "sigmoid":
        return sigmoid(z)
    if name == "tanh":
        return np.tanh(z)
    return z


def _activation_grad_from_output(name, y):
    # derivative expressed through the activation output
    if name == "sigmoid":
        return y * (1.0 - y)
    if name == "tanh":
        return 1.0 - y * y
    return np.ones_like(y)


@dataclass
class DenseLayer:
    """One affine map plus activation: y = act(W x + b).

    weights has shape (out, in); bias has length out; activation is one
    of sigmoid, tanh, linear.
    """

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "linear"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ShapeError(f"weights must be 2-D, got {self.weights.ndim}-D")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"bias length {self.bias.shape} does not match "
                f"{self.weights.shape[0]} output rows"
            )
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ShapeError("layer parameters must be finite")

    @property
    def in_features(self):
        return self.weights.shape[1]

    @property
    def out_features(self):
        return self.weights.shape[0]


def glorot_layer(n_in: int, n_out: int, activation: str, rng: np.random.Generator) -> DenseLayer:
    """Uniform Glorot-initialised layer with zero bias."""
    limit = np.sqrt(6.0 / (n_in + n_out))
    weights = rng.uniform(-limit, limit, size=(n_out, n_in))
    return DenseLayer(weights=weights, bias=np.zeros(n_out), activation=activation)


def _as_batch(x, n_features, what="input"):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[np.newaxis, :]
    if x.ndim != 2 or x.shape[1] != n_features:
        raise ShapeError(f"{what} has shape {np.asarray(x).shape}, expected length {n_features}")
    return x, single


def dense_forward(layer: DenseLayer, x):
    """Apply one layer to a vector or a batch of row vectors."""
    xb, single = _as_batch(x, layer.in_features)
    y = _apply_activation(layer.activation, xb @ layer.weights.T + layer.bias)
    return y[0] if single else y


def forward_network(layers, x):
    """Chain dense_forward over all layers."""
    out = x
    for layer in layers:
        out = dense_forward(layer, out)
    return out


def mse(a, b) -> float:
    """Mean squared error between two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"mse on mismatched shapes {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ShapeError("mse of empty vectors")
    d = a - b
    return float(np.mean(d * d))


def _check_chain(layers):
    for prev, nxt in zip(layers, layers[1:]):
        if nxt.in_features != prev.out_features:
            raise ShapeError(
                f"layer chain broken: {prev.out_features} outputs feed "
                f"{nxt.in_features} inputs"
            )


def network_params(layers) -> dict:
    """Name-keyed view of all weights and biases (shared arrays, not copies)."""
    params = {}
    for i, layer in enumerate(layers):
        params[f"layer{i}.weight"] = layer.weights
        params[f"layer{i}.bias"] = layer.bias
    return params


def backward(layers, x, target) -> dict:
    """Gradients of the mean-squared reconstruction error wrt every parameter.

    Runs one forward pass storing activations, then reverse-mode
    accumulation.  For a batch the loss is the mean per-example MSE, so
    gradients are averaged over rows.  Keys match network_params.
    """
    _check_chain(layers)
    xb, _ = _as_batch(x, layers[0].in_features)
    tb, _ = _as_batch(target, layers[-1].out_features, what="target")
    if tb.shape[0] != xb.shape[0]:
        raise ShapeError(f"batch sizes differ: {xb.shape[0]} inputs vs {tb.shape[0]} targets")

    acts = [xb]
    for layer in layers:
        acts.append(_apply_activation(layer.activation, acts[-1] @ layer.weights.T + layer.bias))

    batch, n_out = tb.shape
    grads = {}
    delta = 2.0 * (acts[-1] - tb) / (batch * n_out)
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        dz = delta * _activation_grad_from_output(layer.activation, acts[i + 1])
        grads[f"layer{i}.weight"] = dz.T @ acts[i]
        grads[f"layer{i}.bias"] = dz.sum(axis=0)
        if i > 0:
            delta = dz @ layer.weights
    return grads


@dataclass
class OptimizerState:
    """SGD or Adam state over one named parameter set."""

    kind: str = "adam"
    learning_rate: float = 0.001
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    step: int = 0
    moments: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ConfigError(f"unknown optimizer kind {self.kind!r}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")


def optimizer_step(state: OptimizerState, params: dict, grads: dict) -> None:
    """One in-place update of every parameter; increments the step counter."""
    state.step += 1
    for name, p in params.items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
        if state.kind == "sgd":
            p -= state.learning_rate * g
            continue
        if name not in state.moments:
            state.moments[name] = (np.zeros_like(p), np.zeros_like(p))
        m, v = state.moments[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**state.step)
        v_hat = v / (1.0 - state.beta2**state.step)
        p -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)


def numeric_gradients(loss_fn, params: dict, step: float) -> dict:
    """Central finite differences of loss_fn wrt every entry of params."""
    if step <= 0:
        raise ConfigError("finite-difference step must be positive")
    grads = {}
    for name, p in params.items():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + step
            up = loss_fn()
            p[idx] = orig - step
            down = loss_fn()
            p[idx] = orig
            g[idx] = (up - down) / (2.0 * step)
            it.iternext()
        grads[name] = g
    return grads


def max_relative_deviation(analytic: dict, numeric: dict) -> float:
    """Worst per-entry deviation |a - n| / max(1, |a|, |n|).

    The unit floor keeps the measure meaningful where gradients vanish;
    above magnitude one it is the ordinary relative error.
    """
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
        worst = max(worst, float(np.max(np.abs(a - n) / scale)))
    return worst


def gradient_check(layers, x, target, step: float = 1e-5) -> float:
    """Compare backward() with central differences; returns the worst deviation."""
    analytic = backward(layers, x, target)
    numeric = numeric_gradients(
        lambda: _batch_loss(layers, x, target), network_params(layers), step
    )
    return max_relative_deviation(analytic, numeric)


def _batch_loss(layers, x, target) -> float:
    xb, _ = _as_batch(x, layers[0].in_features)
    tb, _ = _as_batch(target, layers[-1].out_features, what="target")
    y = forward_network(layers, xb)
    d = y - tb
    return float(np.mean(d * d))
