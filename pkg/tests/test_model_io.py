import json

import numpy as np
import numpy.testing as npt
import pytest

from batwatch.errors import ModelFormatError
from batwatch.gru import GruAutoencoderConfig, build_gru, train_gru
from batwatch.mlp import MlpAutoencoderConfig, build_mlp, train
from batwatch.model_io import load_model, model_fingerprint, save_model


def _trained_mlp():
    model = build_mlp(MlpAutoencoderConfig(input_size=20, hidden_size=8, embedding_size=3), 5)
    rng = np.random.default_rng(6)
    train(model, [rng.normal(size=20) for _ in range(8)], epochs=2, batch_size=4, seed=7)
    model.norm_mean, model.norm_std = 31.5, 2.25
    return model


def test_mlp_round_trip_is_bit_exact(tmp_path):
    model = _trained_mlp()
    path = tmp_path / "model.json"
    save_model(model, path, pipeline={"window_size": 20})
    loaded, doc = load_model(path)
    rng = np.random.default_rng(8)
    for _ in range(5):
        w = rng.normal(size=20)
        out_a, err_a = model.reconstruct(w)
        out_b, err_b = loaded.reconstruct(w)
        npt.assert_array_equal(out_a, out_b)
        assert err_a == err_b
    assert doc["pipeline"] == {"window_size": 20}
    assert doc["model_id"] == model_fingerprint(model) == model_fingerprint(loaded)


def test_gru_round_trip_is_bit_exact(tmp_path):
    model = build_gru(GruAutoencoderConfig(hidden_size=4, sequence_length=12), 9)
    rng = np.random.default_rng(10)
    train_gru(model, [rng.normal(size=12) for _ in range(4)], epochs=1, batch_size=2, seed=11)
    path = tmp_path / "gru.json"
    save_model(model, path)
    loaded, _ = load_model(path)
    w = rng.normal(size=12)
    out_a, err_a = model.reconstruct(w)
    out_b, err_b = loaded.reconstruct(w)
    npt.assert_array_equal(out_a, out_b)
    assert err_a == err_b
    npt.assert_array_equal(model.encode(w), loaded.encode(w))


def test_save_is_byte_deterministic(tmp_path):
    model = _trained_mlp()
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_model(model, p1)
    save_model(model, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_unknown_format_version_rejected(tmp_path):
    model = _trained_mlp()
    path = tmp_path / "model.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["format_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_unknown_architecture_rejected(tmp_path):
    model = _trained_mlp()
    path = tmp_path / "model.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["architecture"]["kind"] = "lstm"
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_garbage_file_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("not json at all {")
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_fingerprint_tracks_parameters():
    a = _trained_mlp()
    b = _trained_mlp()
    assert model_fingerprint(a) == model_fingerprint(b)
    b.layers[0].weights[0, 0] += 1e-9
    assert model_fingerprint(a) != model_fingerprint(b)
