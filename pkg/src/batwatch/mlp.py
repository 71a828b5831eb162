"""Feed-forward autoencoder: window -> embedding -> reconstruction.

The hourglass is symmetric in shape only (weights untied): for the
defaults that is 1000 -> 200 -> 40 -> 200 -> 1000, tanh on the two
hidden layers, linear bottleneck and output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError, TrainingError
from .nncore import (
    OptimizerState,
    backward,
    dense_forward,
    forward_network,
    glorot_layer,
    mse,
    network_params,
    optimizer_step,
)


@dataclass
class MlpAutoencoderConfig:
    input_size: int = 1000
    hidden_size: int = 200
    embedding_size: int = 40
    hidden_activation: str = "tanh"

    def __post_init__(self):
        if not (self.input_size > self.hidden_size > self.embedding_size > 0):
            raise ConfigError(
                "layer sizes must satisfy input > hidden > embedding > 0, got "
                f"{self.input_size} > {self.hidden_size} > {self.embedding_size}"
            )

    def descriptor(self) -> dict:
        return {
            "kind": "mlp",
            "input_size": self.input_size,
            "hidden_size": self.hidden_size,
            "embedding_size": self.embedding_size,
            "hidden_activation": self.hidden_activation,
        }


@dataclass
class MlpAutoencoder:
    """Trained weights plus normalization statistics and training metadata."""

    config: MlpAutoencoderConfig
    layers: list
    seed: int
    norm_mean: float = 0.0
    norm_std: float = 1.0
    epochs_trained: int = 0
    final_loss: float = float("nan")

    @property
    def input_size(self) -> int:
        return self.config.input_size

    def params(self) -> dict:
        return network_params(self.layers)

    def parameter_count(self) -> int:
        return sum(p.size for p in self.params().values())

    def descriptor(self) -> dict:
        return self.config.descriptor()

    def reconstruct(self, window):
        """Forward pass over one normalized window; returns (output, mse)."""
        window = np.asarray(window, dtype=np.float64)
        if window.shape != (self.input_size,):
            raise ShapeError(f"window has shape {window.shape}, expected ({self.input_size},)")
        out = forward_network(self.layers, window)
        return out, mse(window, out)

    def embed(self, window):
        """Bottleneck activation for one window."""
        window = np.asarray(window, dtype=np.float64)
        if window.shape != (self.input_size,):
            raise ShapeError(f"window has shape {window.shape}, expected ({self.input_size},)")
        out = window
        for layer in self.layers[:2]:
            out = dense_forward(layer, out)
        return out


def build_mlp(config: MlpAutoencoderConfig, seed: int) -> MlpAutoencoder:
    """Hourglass network with Glorot weights, deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    sizes = [
        config.input_size,
        config.hidden_size,
        config.embedding_size,
        config.hidden_size,
        config.input_size,
    ]
    activations = [config.hidden_activation, "linear", config.hidden_activation, "linear"]
    layers = [
        glorot_layer(sizes[i], sizes[i + 1], activations[i], rng)
        for i in range(len(sizes) - 1)
    ]
    return MlpAutoencoder(config=config, layers=layers, seed=seed)


def window_matrix(windows, expected_len: int) -> np.ndarray:
    """Stack windows (arrays or objects with .values) into an (n, len) matrix."""
    rows = []
    for w in windows:
        v = np.asarray(getattr(w, "values", w), dtype=np.float64)
        if v.shape != (expected_len,):
            raise ShapeError(f"window has shape {v.shape}, expected ({expected_len},)")
        rows.append(v)
    if not rows:
        raise ShapeError("at least one window is required")
    return np.stack(rows)


def train(
    model: MlpAutoencoder,
    windows,
    epochs: int = 32,
    batch_size: int = 32,
    learning_rate: float = 0.001,
    optimizer: str = "adam",
    seed: int = 0,
) -> list:
    """Minimise the mean reconstruction MSE over the windows, in place.

    Shuffles per epoch with a seeded RNG and keeps the final partial
    batch.  Returns one mean-over-batches loss per epoch (loss measured
    before each update).
    """
    data = window_matrix(windows, model.input_size)
    state = OptimizerState(kind=optimizer, learning_rate=learning_rate)
    rng = np.random.default_rng(seed)
    params = model.params()
    history = []
    for epoch in range(epochs):
        order = rng.permutation(data.shape[0])
        batch_losses = []
        for start in range(0, data.shape[0], batch_size):
            batch = data[order[start : start + batch_size]]
            out = forward_network(model.layers, batch)
            loss = float(np.mean((out - batch) ** 2))
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {start // batch_size}"
                )
            batch_losses.append(loss)
            grads = backward(model.layers, batch, batch)
            optimizer_step(state, params, grads)
        history.append(float(np.mean(batch_losses)))
    model.epochs_trained += epochs
    if history:
        model.final_loss = history[-1]
    return history
