"""Model file format: versioned JSON with decimal-serialized float64
parameters (shortest round-trip representation, so load(save(m)) is
bit-exact) plus normalization statistics and training metadata.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .errors import ModelFormatError
from .gru import GruAutoencoder, GruAutoencoderConfig, GruCellParams
from .mlp import MlpAutoencoder, MlpAutoencoderConfig
from .nncore import DenseLayer

FORMAT_VERSION = 1


def model_fingerprint(model) -> str:
    """Stable id over architecture, parameters and normalization; invariant
    under a save/load round trip."""
    h = hashlib.sha256()
    h.update(json.dumps(model.descriptor(), sort_keys=True).encode())
    h.update(np.float64(model.norm_mean).tobytes())
    h.update(np.float64(model.norm_std).tobytes())
    for name in sorted(model.params()):
        h.update(name.encode())
        h.update(np.ascontiguousarray(model.params()[name], dtype=np.float64).tobytes())
    return h.hexdigest()[:16]


def model_to_document(model, pipeline: dict | None = None) -> dict:
    params = {
        name: {"shape": list(p.shape), "data": [float(x) for x in np.ravel(p)]}
        for name, p in model.params().items()
    }
    doc = {
        "format_version": FORMAT_VERSION,
        "model_id": model_fingerprint(model),
        "architecture": model.descriptor(),
        "normalization": {"mean": model.norm_mean, "std": model.norm_std},
        "parameters": params,
        "training": {
            "seed": model.seed,
            "epochs": model.epochs_trained,
            "final_loss": None if np.isnan(model.final_loss) else model.final_loss,
        },
    }
    if pipeline is not None:
        doc["pipeline"] = pipeline
    return doc


def save_model(model, path, pipeline: dict | None = None) -> None:
    doc = model_to_document(model, pipeline)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def _tensor(doc_params, name):
    entry = doc_params[name]
    return np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])


def model_from_document(doc: dict):
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {doc.get('format_version')!r}"
        )
    arch = doc["architecture"]
    params = doc["parameters"]
    norm = doc["normalization"]
    training = doc.get("training", {})
    kind = arch.get("kind")
    if kind == "mlp":
        config = MlpAutoencoderConfig(
            input_size=arch["input_size"],
            hidden_size=arch["hidden_size"],
            embedding_size=arch["embedding_size"],
            hidden_activation=arch["hidden_activation"],
        )
        activations = [config.hidden_activation, "linear", config.hidden_activation, "linear"]
        layers = [
            DenseLayer(
                weights=_tensor(params, f"layer{i}.weight"),
                bias=_tensor(params, f"layer{i}.bias"),
                activation=activations[i],
            )
            for i in range(4)
        ]
        model = MlpAutoencoder(config=config, layers=layers, seed=training.get("seed", 0))
    elif kind == "gru":
        config = GruAutoencoderConfig(
            hidden_size=arch["hidden_size"], sequence_length=arch["sequence_length"]
        )

        def cell(prefix):
            return GruCellParams(
                **{name: _tensor(params, f"{prefix}.{name}")
                   for name in ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h")}
            )

        model = GruAutoencoder(
            config=config,
            encoder=cell("encoder"),
            decoder=cell("decoder"),
            readout_weight=_tensor(params, "readout.weight"),
            readout_bias=_tensor(params, "readout.bias"),
            seed=training.get("seed", 0),
        )
    else:
        raise ModelFormatError(f"unknown architecture kind {kind!r}")
    model.norm_mean = float(norm["mean"])
    model.norm_std = float(norm["std"])
    model.epochs_trained = int(training.get("epochs", 0))
    final = training.get("final_loss")
    model.final_loss = float("nan") if final is None else float(final)
    return model


def load_model(path):
    """Load a model file; returns (model, full document)."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_document(doc), doc
