import numpy as np
import numpy.testing as npt
import pytest

from batwatch import ingest
from batwatch.errors import ConfigError, ShapeError
from batwatch.mlp import MlpAutoencoder, MlpAutoencoderConfig, build_mlp, train
from batwatch.nncore import dense_forward, mse
from batwatch.simgen import ScenarioConfig, generate


def _tiny_model(seed=1):
    return build_mlp(MlpAutoencoderConfig(input_size=50, hidden_size=20, embedding_size=8), seed)


def test_default_parameter_count_matches_per_layer_sum():
    # oracle: sum of weight + bias counts per layer of 1000-200-40-200-1000
    expected = (1000 * 200 + 200) + (200 * 40 + 40) + (40 * 200 + 200) + (200 * 1000 + 1000)
    assert expected == 417_440
    model = build_mlp(MlpAutoencoderConfig(), seed=0)
    assert model.parameter_count() == expected


def test_tiny_config_hourglass_shapes():
    model = build_mlp(
        MlpAutoencoderConfig(input_size=4, hidden_size=3, embedding_size=2), seed=0
    )
    shapes = [layer.weights.shape for layer in model.layers]
    assert shapes == [(3, 4), (2, 3), (3, 2), (4, 3)]


def test_same_seed_gives_bit_identical_weights():
    a = build_mlp(MlpAutoencoderConfig(input_size=10, hidden_size=6, embedding_size=3), 99)
    b = build_mlp(MlpAutoencoderConfig(input_size=10, hidden_size=6, embedding_size=3), 99)
    for pa, pb in zip(a.params().values(), b.params().values()):
        npt.assert_array_equal(pa, pb)


def test_non_monotone_sizes_rejected():
    with pytest.raises(ConfigError):
        MlpAutoencoderConfig(input_size=100, hidden_size=100, embedding_size=10)
    with pytest.raises(ConfigError):
        MlpAutoencoderConfig(input_size=100, hidden_size=20, embedding_size=40)


def test_encoder_decoder_shape_symmetry():
    model = build_mlp(MlpAutoencoderConfig(), seed=0)
    layers = model.layers
    assert layers[3].weights.shape == layers[0].weights.shape[::-1]
    assert layers[2].weights.shape == layers[1].weights.shape[::-1]


# -------------------------------------------------------------------- train


def test_train_constant_dataset_reaches_optimum():
    model = _tiny_model(seed=0)
    windows = [np.full(50, 0.3) for _ in range(200)]
    history = train(model, windows, epochs=32, batch_size=32, learning_rate=0.001, seed=10)
    assert len(history) == 32
    assert history[-1] < 1e-4  # known global optimum is 0
    # trend invariant on the trivially learnable dataset
    assert all(history[i + 1] <= history[i] for i in range(2, len(history) - 1))
    # a training window reconstructs to the same tolerance
    _, err = model.reconstruct(windows[0])
    assert err < 1e-4


def test_train_zero_epochs_is_noop():
    model = _tiny_model()
    before = {k: v.copy() for k, v in model.params().items()}
    history = train(model, [np.zeros(50)], epochs=0)
    assert history == []
    for k, v in model.params().items():
        npt.assert_array_equal(v, before[k])


def test_train_on_simgen_windows_cuts_loss_by_10x():
    stream = generate(ScenarioConfig(seed=7, vehicles=1, days=1, recharges_per_day=3))
    streams, _ = ingest.clean(stream.records)
    windows = []
    for s in streams:
        for seg in ingest.segment_recharges(s, min_samples=200):
            windows.extend(ingest.windowize(seg, 200, 0.5))
    stats = ingest.fit_normalizer(windows)
    normalized = ingest.normalize_windows(windows, stats)
    model = build_mlp(
        MlpAutoencoderConfig(input_size=200, hidden_size=40, embedding_size=10), seed=1
    )
    history = train(model, normalized, epochs=32, seed=2)
    assert history[-1] < 0.1 * history[0]


def test_train_rejects_wrong_window_length():
    model = _tiny_model()
    with pytest.raises(ShapeError):
        train(model, [np.zeros(49)], epochs=1)
    with pytest.raises(ShapeError):
        train(model, [], epochs=1)


def test_epoch_loss_is_mean_over_batches():
    model = _tiny_model(seed=3)
    rng = np.random.default_rng(4)
    windows = [rng.normal(size=50) for _ in range(10)]
    # batch_size 4 -> batches of 4, 4, 2 (final partial batch kept)
    history = train(model, windows, epochs=1, batch_size=4, learning_rate=0.001, seed=5)
    assert len(history) == 1 and np.isfinite(history[0])


# -------------------------------------------------------- reconstruct/embed


def test_reconstruct_zero_model_forced_output():
    model = _tiny_model()
    for p in model.params().values():
        p[:] = 0.0
    rng = np.random.default_rng(6)
    w = rng.normal(size=50)
    out, err = model.reconstruct(w)
    npt.assert_array_equal(out, np.zeros(50))
    npt.assert_allclose(err, np.mean(w**2), rtol=1e-15)


def test_reconstruct_is_deterministic():
    model = _tiny_model(seed=8)
    w = np.random.default_rng(9).normal(size=50)
    out1, err1 = model.reconstruct(w)
    out2, err2 = model.reconstruct(w)
    npt.assert_array_equal(out1, out2)
    assert err1 == err2


def test_reconstruct_mse_equals_nncore_mse():
    model = _tiny_model(seed=12)
    w = np.random.default_rng(13).normal(size=50)
    out, err = model.reconstruct(w)
    assert err == mse(w, out)


def test_embed_lengths():
    assert build_mlp(MlpAutoencoderConfig(), 0).embed(np.zeros(1000)).shape == (40,)
    tiny = build_mlp(MlpAutoencoderConfig(input_size=6, hidden_size=4, embedding_size=2), 0)
    assert tiny.embed(np.zeros(6)).shape == (2,)


def test_embed_is_bottleneck_of_reconstruct():
    model = _tiny_model(seed=14)
    w = np.random.default_rng(15).normal(size=50)
    # instrument the forward pass layer by layer
    a = w
    for layer in model.layers[:2]:
        a = dense_forward(layer, a)
    npt.assert_array_equal(model.embed(w), a)
    for layer in model.layers[2:]:
        a = dense_forward(layer, a)
    out, _ = model.reconstruct(w)
    npt.assert_array_equal(out, a)


def test_shape_errors_on_wrong_window():
    model = _tiny_model()
    with pytest.raises(ShapeError):
        model.reconstruct(np.zeros(51))
    with pytest.raises(ShapeError):
        model.embed(np.zeros(49))
