"""Feed-forward network, backpropagation, training and the linear baseline."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nanonmr import mlp
from nanonmr.mlp import MLPModel, TrainConfig


def _rand_model(rng, sizes, recode=False):
    W = [rng.normal(0, 1, (a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    B = [rng.normal(0, 0.5, b) for b in sizes[1:]]
    return MLPModel(list(sizes), W, B, recode)


def test_parameter_count_guard():
    assert mlp.init(1000, 0).n_parameters == 20_791
    assert mlp.init(1000, 0).layer_sizes == [1000, 20, 35, 1]


def test_init_deterministic_and_zero_biases():
    a, b = mlp.init(50, 7), mlp.init(50, 7)
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
    assert all(np.all(bb == 0) for bb in a.biases)
    assert not np.array_equal(mlp.init(50, 8).weights[0], a.weights[0])


def test_init_weight_variance():
    w = mlp.init(1000, 1).weights[0]
    assert w.var() == pytest.approx(1 / 1000, rel=0.10)
    assert abs(w.mean()) < 4 * np.sqrt(1 / 1000 / w.size)


def test_zero_network_scores_half():
    m = mlp.zeros_like(mlp.init(10, 0))
    assert np.all(mlp.forward(m, np.ones((3, 10))) == 0.5)
    out = mlp.classify(m, np.zeros((4, 10)))
    assert np.all(out["label"] == 1)


def test_output_bias_only():
    m = mlp.zeros_like(mlp.init(6, 0))
    m.biases[-1][:] = math.log(3)
    assert mlp.forward(m, np.zeros(6))[0] == pytest.approx(0.75, abs=1e-15)


def test_forward_hand_unrolled():
    rng = np.random.default_rng(0)
    m = _rand_model(rng, [4, 2, 2, 1])
    x = rng.integers(0, 2, 4).astype(float)
    (W1, W2, W3), (b1, b2, b3) = m.weights, m.biases
    h1 = [max(0.0, sum(x[i] * W1[i, j] for i in range(4)) + b1[j]) for j in range(2)]
    h2 = [max(0.0, sum(h1[i] * W2[i, j] for i in range(2)) + b2[j]) for j in range(2)]
    z = sum(h2[i] * W3[i, 0] for i in range(2)) + b3[0]
    assert mlp.forward(m, x)[0] == pytest.approx(1 / (1 + math.exp(-z)), abs=1e-12)


def test_forward_rejects_wrong_length():
    with pytest.raises(ValueError):
        mlp.forward(mlp.init(5, 0), np.ones(4))


def test_scores_in_open_interval():
    rng = np.random.default_rng(1)
    m = mlp.init(30, 1)
    s = mlp.forward(m, rng.integers(0, 2, (100, 30)))
    assert np.all((s > 0) & (s < 1))
    # saturated inputs may round to the endpoints but never leave [0, 1]
    m = _rand_model(rng, [30, 20, 35, 1])
    s = mlp.forward(m, rng.integers(0, 2, (100, 30)) * 1e4)
    assert np.all(np.isfinite(s) & (s >= 0) & (s <= 1))


def test_sigmoid_extremes_finite():
    z = np.array([-1000.0, 0.0, 1000.0])
    s = mlp.sigmoid(z)
    assert np.all(np.isfinite(s)) and s[1] == 0.5


def test_loss_values():
    assert mlp.loss([0, 1, 1], [0, 1, 1]) == 0
    assert mlp.loss([0.5] * 4, [0, 1, 0, 1]) == pytest.approx(0.25)
    assert mlp.loss([0.2, 0.9, 0.5], [0, 1, 0]) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        mlp.loss([], [])


def _flat(model):
    return [*model.weights, *model.biases]


def _finite_difference(model, X, y, h=1e-5):
    out = []
    for p in _flat(model):
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = mlp.loss(mlp.forward(model, X), y)
            p[idx] = old - h
            down = mlp.loss(mlp.forward(model, X), y)
            p[idx] = old
            g[idx] = (up - down) / (2 * h)
        out.append(g)
    return out


def _pre_activations(model, X):
    A = model.prepare(X)
    pre = []
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = A @ w + b
        pre.append(z)
        A = np.maximum(z, 0)
    return pre


@settings(max_examples=20, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    sizes=st.tuples(st.integers(1, 6), st.integers(1, 5), st.integers(1, 5)),
    batch=st.integers(1, 8),
    recode=st.booleans(),
)
def test_gradients_match_central_differences(seed, sizes, batch, recode):
    rng = np.random.default_rng(seed)
    model = _rand_model(rng, [*sizes, 1], recode)
    X = rng.integers(0, 2, (batch, sizes[0])).astype(float)
    y = rng.integers(0, 2, batch).astype(float)
    # stay away from ReLU kinks, where the derivative is not defined
    assume(all(np.min(np.abs(z)) > 1e-3 for z in _pre_activations(model, X)))
    dW, db, value = mlp.gradients(model, X, y)
    assert value == pytest.approx(mlp.loss(mlp.forward(model, X), y))
    for a, n in zip([*dW, *db], _finite_difference(model, X, y)):
        scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-7)
        assert np.all(np.abs(a - n) / scale < 1e-4)


def test_zero_network_gradient_matches_fd():
    model = mlp.zeros_like(mlp.init(5, 0))
    X = np.random.default_rng(2).integers(0, 2, (6, 5)).astype(float)
    y = np.array([0, 1, 1, 0, 1, 1.0])
    dW, db, _ = mlp.gradients(model, X, y)
    fd = _finite_difference(model, X, y)
    for a, n in zip([*dW, *db], fd):
        assert np.allclose(a, n, atol=1e-9)
    # only the output bias sees a signal: d/db = mean(2 (0.5 - y) * 0.25)
    assert db[-1][0] == pytest.approx(np.mean(2 * (0.5 - y) * 0.25))


def test_duplicated_batch_same_gradient():
    rng = np.random.default_rng(3)
    model = _rand_model(rng, [6, 4, 3, 1])
    X = rng.integers(0, 2, (5, 6)).astype(float)
    y = rng.integers(0, 2, 5).astype(float)
    g1 = mlp.gradients(model, X, y)
    g2 = mlp.gradients(model, np.concatenate([X, X]), np.concatenate([y, y]))
    for a, b in zip([*g1[0], *g1[1]], [*g2[0], *g2[1]]):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-15)


def test_dead_relu_has_zero_incoming_gradient():
    rng = np.random.default_rng(4)
    model = _rand_model(rng, [6, 4, 3, 1])
    model.biases[0][2] = -100.0  # unit 2 never fires on 0/1 inputs
    X = rng.integers(0, 2, (10, 6)).astype(float)
    dW, db, _ = mlp.gradients(model, X, rng.integers(0, 2, 10))
    assert np.all(dW[0][:, 2] == 0) and db[0][2] == 0


def test_small_step_lowers_loss_on_fixed_batch():
    rng = np.random.default_rng(5)
    model = _rand_model(rng, [8, 5, 4, 1])
    X = rng.integers(0, 2, (16, 8)).astype(float)
    y = rng.integers(0, 2, 16).astype(float)
    prev = mlp.gradients(model, X, y)[2]
    for _ in range(20):
        dW, db, _ = mlp.gradients(model, X, y)
        for p, g in zip(_flat(model), [*dW, *db]):
            p -= 1e-3 * g
        cur = mlp.loss(mlp.forward(model, X), y)
        assert cur <= prev + 1e-15
        prev = cur


def test_classify_threshold():
    m = mlp.zeros_like(mlp.init(3, 0))
    m.biases[-1][:] = math.log(0.7 / 0.3)
    assert mlp.classify(m, np.zeros(3))["label"][0] == 1
    m.biases[-1][:] = math.log(0.3 / 0.7)
    assert mlp.classify(m, np.zeros(3))["label"][0] == 0


# ---- training ----

def _toy(n=100, width=16):
    X = np.concatenate([np.zeros((n, width)), np.ones((n, width))])
    y = np.r_[np.zeros(n), np.ones(n)]
    return X, y


@pytest.mark.parametrize("optimizer", ["adam", "momentum"])
def test_separable_toy_task(optimizer):
    X, y = _toy()
    cfg = TrainConfig(max_epochs=50, optimizer=optimizer, learning_rate=1e-2, batch_size=16)
    res = mlp.train(X, y, cfg)
    assert np.all(mlp.classify(res.model, X)["label"] == y)
    assert len(res.history) <= 50


def test_training_deterministic():
    rng = np.random.default_rng(6)
    X = rng.integers(0, 2, (200, 20))
    y = np.arange(200) % 2
    cfg = TrainConfig(max_epochs=5)
    a, b = mlp.train(X, y, cfg), mlp.train(X, y, cfg)
    assert all(np.array_equal(p, q) for p, q in zip(_flat(a.model), _flat(b.model)))
    assert a.history == b.history


def test_early_stopping_returns_best_validation_model():
    rng = np.random.default_rng(7)
    X = rng.integers(0, 2, (300, 30))
    y = rng.integers(0, 2, 300)  # pure noise: validation loss soon rises
    res = mlp.train(X, y, TrainConfig(max_epochs=200, early_stop_patience=5, learning_rate=1e-2))
    vals = [h["val_loss"] for h in res.history]
    assert len(vals) < 200
    if res.best_epoch:
        assert vals[res.best_epoch - 1] == min(vals)


def test_divergence_reported():
    X, y = _toy(20, 4)
    with pytest.raises(mlp.TrainingDiverged) as exc:
        mlp.train(X * np.nan, y, TrainConfig(max_epochs=3))
    assert exc.value.epoch == 1


def test_train_requires_both_classes_and_valid_config():
    with pytest.raises(ValueError):
        mlp.train(np.ones((5, 3)), np.zeros(5))
    with pytest.raises(ValueError):
        TrainConfig(validation_fraction=0.6)
    with pytest.raises(ValueError):
        TrainConfig(optimizer="sgd")


def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    model = _rand_model(rng, [7, 20, 35, 1], recode=True)
    path = tmp_path / "m.json"
    mlp.save_checkpoint(model, path, TrainConfig(), {"best_epoch": 3})
    back = mlp.load_checkpoint(path)
    X = rng.integers(0, 2, (5, 7))
    assert np.array_equal(mlp.forward(back, X), mlp.forward(model, X))
    assert back.layer_sizes == model.layer_sizes and back.recode_pm1


# ---- linear baseline ----

def test_linear_separable():
    X, y = _toy(50, 8)
    lin = mlp.train_linear_baseline(X, y)
    assert np.all(mlp.classify_linear(lin, X) == y)


def test_linear_label_flip_flips_weights():
    rng = np.random.default_rng(9)
    X = rng.integers(0, 2, (200, 6)).astype(float)
    y = (X[:, 0] + rng.random(200) > 0.8).astype(int)
    a = mlp.train_linear_baseline(X, y)
    b = mlp.train_linear_baseline(X, 1 - y)
    assert np.allclose(a.weights, -b.weights, atol=1e-4)
    assert a.bias == pytest.approx(-b.bias, abs=1e-4)
