import numpy as np
import pytest

from spikeid import ann
from spikeid.ann import LayerSpec, NetworkModel, TrainConfig
from spikeid.errors import NumericError, ValidationError

from naive_ref import naive_argmax_accuracy, naive_forward


def _random_small_model(rng):
    input_len = int(rng.integers(16, 40))
    f1 = int(rng.integers(2, 4))
    f2 = int(rng.integers(2, 4))
    k1 = int(rng.integers(2, 6))
    s1 = int(rng.integers(1, 3))
    len1 = (input_len - k1) // s1 + 1
    k2 = int(rng.integers(2, min(5, len1) + 1))
    s2 = int(rng.integers(1, 3))
    len2 = (len1 - k2) // s2 + 1
    n_classes = int(rng.integers(2, 5))
    layers = [
        LayerSpec("conv1d", in_channels=1, out_channels=f1, kernel_size=k1,
                  stride=s1, activation="relu"),
        LayerSpec("conv1d", in_channels=f1, out_channels=f2, kernel_size=k2,
                  stride=s2, activation="relu"),
        LayerSpec("flatten"),
        LayerSpec("dense", in_units=len2 * f2, out_units=n_classes,
                  activation="softmax"),
    ]
    params = ann.init_params(layers, input_len, int(rng.integers(0, 2**31)))
    model = NetworkModel(layers=layers, params=params, input_len=input_len,
                         n_classes=n_classes)
    return model


def _tiny_model(seed=0):
    layers = [
        LayerSpec("conv1d", in_channels=1, out_channels=2, kernel_size=3,
                  stride=2, activation="relu"),
        LayerSpec("conv1d", in_channels=2, out_channels=2, kernel_size=3,
                  stride=1, activation="relu"),
        LayerSpec("flatten"),
        LayerSpec("dense", in_units=10, out_units=3, activation="softmax"),
    ]
    params = ann.init_params(layers, 16, seed)
    return NetworkModel(layers=layers, params=params, input_len=16, n_classes=3)


def test_reference_geometry_exact():
    model = ann.build_reference_architecture(3238, 6, scale=1.0, rng_seed=0)
    assert model.unit_counts() == [51696, 12896, 6]


def test_seeded_init_reproducible():
    a = ann.build_reference_architecture(512, 6, scale=0.25, rng_seed=3)
    b = ann.build_reference_architecture(512, 6, scale=0.25, rng_seed=3)
    c = ann.build_reference_architecture(512, 6, scale=0.25, rng_seed=4)
    for (wa, ba), (wb, bb) in zip(a.params[:2], b.params[:2]):
        assert np.array_equal(wa, wb) and np.array_equal(ba, bb)
    assert not np.array_equal(a.params[0][0], c.params[0][0])


def test_scaled_architecture_shapes():
    model = ann.build_reference_architecture(512, 6, scale=0.25, rng_seed=0)
    shapes = model.shapes()
    assert all(np.prod(s) >= 1 for s in shapes)
    probs = ann.forward(model, np.random.default_rng(0).random(512))
    assert probs.shape == (6,)


def test_architecture_validation():
    with pytest.raises(ValidationError):
        ann.build_reference_architecture(16, 6)  # too short
    with pytest.raises(ValidationError):
        ann.build_reference_architecture(512, 6, scale=1.5)
    with pytest.raises(ValidationError):
        LayerSpec("pool")
    # softmax on a hidden layer
    layers = [
        LayerSpec("dense", in_units=4, out_units=4, activation="softmax"),
        LayerSpec("dense", in_units=4, out_units=2, activation="softmax"),
    ]
    params = ann.init_params(layers, 4, 0)
    with pytest.raises(ValidationError):
        NetworkModel(layers=layers, params=params, input_len=4, n_classes=2)


def test_forward_probabilities():
    model = _tiny_model()
    rng = np.random.default_rng(0)
    probs = ann.forward_batch(model, rng.random((8, 16)))
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)
    assert np.all(probs >= 0)


def test_forward_zero_weights_uniform():
    model = _tiny_model()
    model.params = [None if p is None else (np.zeros_like(p[0]), np.zeros_like(p[1]))
                    for p in model.params]
    probs = ann.forward(model, np.random.default_rng(1).random(16))
    assert np.allclose(probs, 1.0 / 3.0, atol=1e-12)


def test_forward_validation():
    model = _tiny_model()
    with pytest.raises(ValidationError):
        ann.forward(model, np.zeros(5))
    bad = np.zeros(16)
    bad[3] = np.nan
    with pytest.raises(ValidationError):
        ann.forward(model, bad)


def test_forward_matches_naive_reference():
    rng = np.random.default_rng(42)
    for _ in range(20):
        model = _random_small_model(rng)
        x = rng.normal(size=model.input_len)
        got = ann.forward(model, x)
        want = np.array(naive_forward(model, x))
        assert np.max(np.abs(got - want)) < 1e-10


def test_gradients_match_finite_differences():
    model = _tiny_model(seed=5)
    rng = np.random.default_rng(6)
    x = rng.random((4, 16))
    y = np.array([0, 1, 2, 1])
    grads, loss, _ = ann.grad(model, x, y)

    def loss_at():
        _, l, _ = ann.grad(model, x, y)
        return l

    h = 1e-5
    worst = 0.0
    for li, p in enumerate(model.params):
        if p is None:
            continue
        for arr, garr in zip(p, grads[li]):
            flat = arr.ravel()
            gflat = garr.ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + h
                lp = loss_at()
                flat[idx] = orig - h
                lm = loss_at()
                flat[idx] = orig
                fd = (lp - lm) / (2 * h)
                denom = max(abs(fd), abs(gflat[idx]), 1e-8)
                worst = max(worst, abs(fd - gflat[idx]) / denom)
    assert worst < 1e-4, f"worst gradient relative error {worst}"


def test_grad_duplicated_sample_equals_single():
    model = _tiny_model(seed=2)
    rng = np.random.default_rng(3)
    x = rng.random((1, 16))
    y = np.array([1])
    g1, _, _ = ann.grad(model, x, y)
    g2, _, _ = ann.grad(model, np.repeat(x, 3, axis=0), np.repeat(y, 3))
    for a, b in zip(g1, g2):
        if a is None:
            continue
        assert np.allclose(a[0], b[0], atol=1e-12)
        assert np.allclose(a[1], b[1], atol=1e-12)


def test_grad_zero_when_prediction_matches():
    # drive the correct logit far above the rest: output-layer gradient
    # collapses to ~0
    model = _tiny_model(seed=1)
    w, b = model.params[3]
    b[:] = [80.0, 0.0, 0.0]
    w[:] = 0.0
    grads, loss, probs = ann.grad(model, np.random.default_rng(0).random((2, 16)),
                                  np.array([0, 0]))
    assert loss < 1e-10
    assert np.max(np.abs(grads[3][0])) < 1e-10
    assert np.max(np.abs(grads[3][1])) < 1e-10


def test_grad_validation():
    model = _tiny_model()
    with pytest.raises(ValidationError):
        ann.grad(model, np.zeros((0, 16)), np.zeros(0, dtype=int))
    with pytest.raises(ValidationError):
        ann.grad(model, np.zeros((2, 16)), np.array([0, 7]))


def _separable_toy(n_per=30, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.random((2 * n_per, 32)) * 0.05
    x[:n_per, 4:9] += 1.0   # class 0 bump left
    x[n_per:, 22:27] += 1.0  # class 1 bump right
    y = np.array([0] * n_per + [1] * n_per)
    return x, y


def _toy_model(seed=0):
    layers = [
        LayerSpec("conv1d", in_channels=1, out_channels=3, kernel_size=5,
                  stride=2, activation="relu"),
        LayerSpec("flatten"),
        LayerSpec("dense", in_units=42, out_units=2, activation="softmax"),
    ]
    params = ann.init_params(layers, 32, seed)
    return NetworkModel(layers=layers, params=params, input_len=32, n_classes=2)


def test_train_separable_toy_reaches_100():
    x, y = _separable_toy()
    model = _toy_model()
    model, trace = ann.train(model, x, y, TrainConfig(epochs=50, rng_seed=0))
    assert trace[-1]["accuracy"] == 1.0
    assert trace[-1]["loss"] <= trace[0]["loss"]


def test_train_zero_learning_rate_keeps_params():
    x, y = _separable_toy(10)
    model = _toy_model(seed=3)
    before = [(w.copy(), b.copy()) for w, b in (p for p in model.params if p)]
    trained, _ = ann.train(model, x, y, TrainConfig(learning_rate=0.0, epochs=3,
                                                    optimizer="sgd", rng_seed=0))
    after = [p for p in trained.params if p]
    for (w0, b0), (w1, b1) in zip(before, after):
        assert np.array_equal(w0, w1) and np.array_equal(b0, b1)


def test_train_deterministic():
    x, y = _separable_toy(12)
    m1, _ = ann.train(_toy_model(1), x, y, TrainConfig(epochs=5, rng_seed=9))
    m2, _ = ann.train(_toy_model(1), x, y, TrainConfig(epochs=5, rng_seed=9))
    for p1, p2 in zip(m1.params, m2.params):
        if p1 is None:
            continue
        assert np.array_equal(p1[0], p2[0]) and np.array_equal(p1[1], p2[1])


def test_train_nan_aborts_with_numeric_error():
    # overflowing parameters push the logits to inf and the loss to nan
    x, y = _separable_toy(10)
    model = _toy_model(seed=2)
    for p in model.params:
        if p is not None:
            p[0][:] = 1e200
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NumericError):
            ann.train(model, x, y, TrainConfig(epochs=1, optimizer="sgd", rng_seed=0))


def test_evaluate_counts_and_oracle():
    x, y = _separable_toy(15, seed=4)
    model = _toy_model(seed=4)
    model, _ = ann.train(model, x, y, TrainConfig(epochs=20, rng_seed=0))
    res = ann.evaluate(model, x, y)
    assert res["confusion"].sum() == len(y)
    probs = ann.forward_batch(model, x)
    assert res["accuracy"] == naive_argmax_accuracy(probs.tolist(), y.tolist())


def test_evaluate_constant_predictor_balanced():
    layers = [LayerSpec("dense", in_units=4, out_units=6, activation="softmax")]
    w = np.zeros((6, 4))
    b = np.array([10.0, 0, 0, 0, 0, 0])
    model = NetworkModel(layers=layers, params=[(w, b)], input_len=4, n_classes=6)
    rng = np.random.default_rng(0)
    x = rng.random((60, 4))
    y = np.repeat(np.arange(6), 10)
    res = ann.evaluate(model, x, y)
    assert np.isclose(res["accuracy"], 1.0 / 6.0)


def test_checkpoint_roundtrip(tmp_path):
    x, y = _separable_toy(10, seed=5)
    model = _toy_model(seed=5)
    model.class_names = ["left", "right"]
    model, _ = ann.train(model, x, y, TrainConfig(epochs=5, rng_seed=1))
    path = tmp_path / "ckpt.json"
    ann.save_checkpoint(path, model)
    back = ann.load_checkpoint(path)
    assert back.class_names == ["left", "right"]
    for p1, p2 in zip(model.params, back.params):
        if p1 is None:
            assert p2 is None
            continue
        assert np.array_equal(p1[0], p2[0]) and np.array_equal(p1[1], p2[1])
    assert np.array_equal(ann.forward_batch(model, x), ann.forward_batch(back, x))
