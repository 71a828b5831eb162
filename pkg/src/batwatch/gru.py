"""Recurrent autoencoder: a GRU encoder folds the window into its final
hidden state, a second GRU unrolls from that state with zero inputs and
a shared linear readout emits one scalar per step.

Gate convention: z is the mix-in weight of the candidate,
h_t = (1 - z) * h_prev + z * h_cand, so zero weights give h_t = h_prev / 2.
Training is full (non-truncated) backpropagation through time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError, TrainingError
from .mlp import window_matrix
from .nncore import OptimizerState, optimizer_step, sigmoid


@dataclass
class GruCellParams:
    """Update gate (W_z, U_z, b_z), reset gate (W_r, U_r, b_r) and
    candidate (W_h, U_h, b_h) parameters of one cell."""

    W_z: np.ndarray
    U_z: np.ndarray
    b_z: np.ndarray
    W_r: np.ndarray
    U_r: np.ndarray
    b_r: np.ndarray
    W_h: np.ndarray
    U_h: np.ndarray
    b_h: np.ndarray

    def __post_init__(self):
        h, i = self.W_z.shape
        for name in ("W_z", "W_r", "W_h"):
            if getattr(self, name).shape != (h, i):
                raise ShapeError(f"{name} must have shape ({h}, {i})")
        for name in ("U_z", "U_r", "U_h"):
            if getattr(self, name).shape != (h, h):
                raise ShapeError(f"{name} must have shape ({h}, {h})")
        for name in ("b_z", "b_r", "b_h"):
            if getattr(self, name).shape != (h,):
                raise ShapeError(f"{name} must have length {h}")

    @property
    def hidden_size(self) -> int:
        return self.W_z.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_z.shape[1]

    def named(self, prefix: str) -> dict:
        return {
            f"{prefix}.{name}": getattr(self, name)
            for name in ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h")
        }


@dataclass
class GruAutoencoderConfig:
    hidden_size: int = 1024
    sequence_length: int = 1000

    def __post_init__(self):
        if self.hidden_size <= 0:
            raise ConfigError("hidden_size must be positive")
        if self.sequence_length <= 0:
            raise ConfigError("sequence_length must be positive")

    def descriptor(self) -> dict:
        return {
            "kind": "gru",
            "hidden_size": self.hidden_size,
            "sequence_length": self.sequence_length,
        }


def gru_init(input_size: int, hidden_size: int, rng: np.random.Generator) -> GruCellParams:
    """Glorot-uniform gate matrices, zero biases."""

    def mat(rows, cols):
        limit = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-limit, limit, size=(rows, cols))

    return GruCellParams(
        W_z=mat(hidden_size, input_size),
        U_z=mat(hidden_size, hidden_size),
        b_z=np.zeros(hidden_size),
        W_r=mat(hidden_size, input_size),
        U_r=mat(hidden_size, hidden_size),
        b_r=np.zeros(hidden_size),
        W_h=mat(hidden_size, input_size),
        U_h=mat(hidden_size, hidden_size),
        b_h=np.zeros(hidden_size),
    )


def _step_batch(cell, x, h_prev):
    # x: (B, input), h_prev: (B, hidden); returns (z, r, hc, h)
    z = sigmoid(x @ cell.W_z.T + h_prev @ cell.U_z.T + cell.b_z)
    r = sigmoid(x @ cell.W_r.T + h_prev @ cell.U_r.T + cell.b_r)
    hc = np.tanh(x @ cell.W_h.T + (r * h_prev) @ cell.U_h.T + cell.b_h)
    h = (1.0 - z) * h_prev + z * hc
    return z, r, hc, h


def gru_cell_step(cell: GruCellParams, x_t, h_prev):
    """One recurrence step for a single input vector and hidden state."""
    x_t = np.atleast_1d(np.asarray(x_t, dtype=np.float64))
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x_t.shape != (cell.input_size,):
        raise ShapeError(f"input has shape {x_t.shape}, expected ({cell.input_size},)")
    if h_prev.shape != (cell.hidden_size,):
        raise ShapeError(f"state has shape {h_prev.shape}, expected ({cell.hidden_size},)")
    _, _, _, h = _step_batch(cell, x_t[np.newaxis, :], h_prev[np.newaxis, :])
    return h[0]


def encode(cell: GruCellParams, window) -> np.ndarray:
    """Run the encoder over a scalar sequence from a zero initial state."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1 or window.size == 0:
        raise ShapeError("window must be a nonempty 1-D sequence")
    if cell.input_size != 1:
        raise ShapeError("encode expects a cell with scalar inputs")
    h = np.zeros((1, cell.hidden_size))
    for t in range(window.size):
        _, _, _, h = _step_batch(cell, window[t : t + 1][np.newaxis, :], h)
    return h[0]


def decode(cell: GruCellParams, readout_weight, readout_bias, h, length: int) -> np.ndarray:
    """Unroll the decoder from state h with zero step inputs; emit one
    scalar per step through the shared linear readout."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (cell.hidden_size,):
        raise ShapeError(f"state has shape {h.shape}, expected ({cell.hidden_size},)")
    if length <= 0:
        raise ShapeError("length must be positive")
    state = h[np.newaxis, :]
    zero = np.zeros((1, cell.input_size))
    out = np.empty(length)
    for t in range(length):
        _, _, _, state = _step_batch(cell, zero, state)
        out[t] = state[0] @ readout_weight + readout_bias[0]
    return out


@dataclass
class GruAutoencoder:
    config: GruAutoencoderConfig
    encoder: GruCellParams
    decoder: GruCellParams
    readout_weight: np.ndarray
    readout_bias: np.ndarray
    seed: int
    norm_mean: float = 0.0
    norm_std: float = 1.0
    epochs_trained: int = 0
    final_loss: float = float("nan")

    @property
    def input_size(self) -> int:
        # alias so MLP and GRU models share the window-length contract
        return self.config.sequence_length

    def params(self) -> dict:
        p = self.encoder.named("encoder")
        p.update(self.decoder.named("decoder"))
        p["readout.weight"] = self.readout_weight
        p["readout.bias"] = self.readout_bias
        return p

    def descriptor(self) -> dict:
        return self.config.descriptor()

    def encode(self, window) -> np.ndarray:
        window = np.asarray(window, dtype=np.float64)
        if window.shape != (self.config.sequence_length,):
            raise ShapeError(
                f"window has shape {window.shape}, expected ({self.config.sequence_length},)"
            )
        return encode(self.encoder, window)

    def decode(self, h, length: int) -> np.ndarray:
        return decode(self.decoder, self.readout_weight, self.readout_bias, h, length)

    def reconstruct(self, window):
        """Encode then decode one normalized window; returns (output, mse)."""
        window = np.asarray(window, dtype=np.float64)
        h = self.encode(window)
        out = self.decode(h, window.size)
        d = out - window
        return out, float(np.mean(d * d))


def build_gru(config: GruAutoencoderConfig, seed: int) -> GruAutoencoder:
    """Encoder/decoder cells plus readout, deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    encoder = gru_init(1, config.hidden_size, rng)
    decoder = gru_init(1, config.hidden_size, rng)
    limit = np.sqrt(6.0 / (config.hidden_size + 1))
    readout_weight = rng.uniform(-limit, limit, size=config.hidden_size)
    return GruAutoencoder(
        config=config,
        encoder=encoder,
        decoder=decoder,
        readout_weight=readout_weight,
        readout_bias=np.zeros(1),
        seed=seed,
    )


def _forward_batch(model, batch):
    """Unrolled forward over a (B, T) batch; returns outputs and caches."""
    B, T = batch.shape
    H = model.config.hidden_size
    h = np.zeros((B, H))
    enc_cache = []
    for t in range(T):
        x = batch[:, t : t + 1]
        z, r, hc, h_next = _step_batch(model.encoder, x, h)
        enc_cache.append((x, h, z, r, hc))
        h = h_next
    dec_cache = []
    zero = np.zeros((B, 1))
    out = np.empty((B, T))
    d = h
    for t in range(T):
        z, r, hc, d_next = _step_batch(model.decoder, zero, d)
        dec_cache.append((zero, d, z, r, hc, d_next))
        out[:, t] = d_next @ model.readout_weight + model.readout_bias[0]
        d = d_next
    return out, h, enc_cache, dec_cache


def _cell_backward(cell, grads, prefix, cache, dh, step_label):
    """Reverse one recurrence step; returns the gradient wrt h_prev."""
    x, h_prev, z, r, hc = cache
    if not np.all(np.isfinite(dh)):
        raise TrainingError(f"non-finite gradient at unrolled step {step_label}")
    dz = dh * (hc - h_prev)
    dhc = dh * z
    dh_prev = dh * (1.0 - z)

    da_h = dhc * (1.0 - hc * hc)
    grads[f"{prefix}.W_h"] += da_h.T @ x
    grads[f"{prefix}.U_h"] += da_h.T @ (r * h_prev)
    grads[f"{prefix}.b_h"] += da_h.sum(axis=0)
    drh = da_h @ cell.U_h
    dr = drh * h_prev
    dh_prev += drh * r

    da_r = dr * r * (1.0 - r)
    grads[f"{prefix}.W_r"] += da_r.T @ x
    grads[f"{prefix}.U_r"] += da_r.T @ h_prev
    grads[f"{prefix}.b_r"] += da_r.sum(axis=0)
    dh_prev += da_r @ cell.U_r

    da_z = dz * z * (1.0 - z)
    grads[f"{prefix}.W_z"] += da_z.T @ x
    grads[f"{prefix}.U_z"] += da_z.T @ h_prev
    grads[f"{prefix}.b_z"] += da_z.sum(axis=0)
    dh_prev += da_z @ cell.U_z
    return dh_prev


def gru_backward(model: GruAutoencoder, batch: np.ndarray):
    """Loss and full-BPTT gradients of the mean reconstruction MSE on a
    (B, T) batch.  Gradient keys match model.params()."""
    out, _, enc_cache, dec_cache = _forward_batch(model, batch)
    B, T = batch.shape
    diff = out - batch
    loss = float(np.mean(diff * diff))
    grads = {name: np.zeros_like(p) for name, p in model.params().items()}
    d_out = 2.0 * diff / (B * T)

    dh = np.zeros((B, model.config.hidden_size))
    for t in range(T - 1, -1, -1):
        zero, d_prev, z, r, hc, d_t = dec_cache[t]
        dy = d_out[:, t]
        grads["readout.weight"] += d_t.T @ dy
        grads["readout.bias"][0] += dy.sum()
        dh = dh + dy[:, np.newaxis] * model.readout_weight[np.newaxis, :]
        dh = _cell_backward(
            model.decoder, grads, "decoder", (zero, d_prev, z, r, hc), dh, f"decoder[{t}]"
        )
    for t in range(T - 1, -1, -1):
        dh = _cell_backward(model.encoder, grads, "encoder", enc_cache[t], dh, f"encoder[{t}]")
    return loss, grads


def train_gru(
    model: GruAutoencoder,
    windows,
    epochs: int = 32,
    batch_size: int = 32,
    learning_rate: float = 0.001,
    optimizer: str = "adam",
    seed: int = 0,
    clip_norm: float | None = None,
) -> list:
    """Train in place with the same shuffling/batching contract as the MLP.

    clip_norm, when set, rescales each batch gradient to that global
    norm; off by default.
    """
    data = window_matrix(windows, model.config.sequence_length)
    state = OptimizerState(kind=optimizer, learning_rate=learning_rate)
    rng = np.random.default_rng(seed)
    params = model.params()
    history = []
    for epoch in range(epochs):
        order = rng.permutation(data.shape[0])
        batch_losses = []
        for start in range(0, data.shape[0], batch_size):
            batch = data[order[start : start + batch_size]]
            loss, grads = gru_backward(model, batch)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {start // batch_size}"
                )
            if clip_norm is not None:
                total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
                if total > clip_norm:
                    for g in grads.values():
                        g *= clip_norm / total
            batch_losses.append(loss)
            optimizer_step(state, params, grads)
        history.append(float(np.mean(batch_losses)))
    model.epochs_trained += epochs
    if history:
        model.final_loss = history[-1]
    return history


def mean_reconstruction_error(model, windows) -> float:
    """Mean MSE of the model over a window set."""
    errors = [model.reconstruct(np.asarray(getattr(w, "values", w), dtype=np.float64))[1] for w in windows]
    return float(np.mean(errors))


def sweep_hidden_sizes(
    sizes,
    train_windows,
    val_windows,
    sequence_length: int,
    epochs: int = 32,
    batch_size: int = 32,
    learning_rate: float = 0.001,
    seed: int = 0,
) -> list:
    """Train one model per hidden size with identical seeds and
    hyperparameters; returns (size, train_loss, val_loss) rows sorted by
    validation loss."""
    if not sizes:
        raise ConfigError("at least one hidden size is required")
    rows = []
    for size in sizes:
        config = GruAutoencoderConfig(hidden_size=size, sequence_length=sequence_length)
        model = build_gru(config, seed)
        history = train_gru(
            model,
            train_windows,
            epochs=epochs,
            batch_size=batch_size,
            learning_rate=learning_rate,
            seed=seed,
        )
        train_loss = history[-1] if history else float("nan")
        val_loss = mean_reconstruction_error(model, val_windows)
        rows.append({"hidden_size": size, "train_loss": train_loss, "val_loss": val_loss})
    rows.sort(key=lambda row: row["val_loss"])
    return rows
