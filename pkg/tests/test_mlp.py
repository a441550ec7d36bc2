import json

import numpy as np
import pytest

from fusion_ids.errors import DimensionError, TrainingError
from fusion_ids.mlp import (
    MlpConfig,
    MlpModel,
    bce_loss,
    init_layers,
    loss_and_grads,
    mlp_decide,
    mlp_score,
    mlp_train,
)
from fusion_ids.nslkdd import ClassLabel


def separable_toy():
    """20 points split by x0 + x1 = 0 with margin 1 (checked below by hand)."""
    rng = np.random.default_rng(0)
    pts, labels = [], []
    while len(pts) < 20:
        p = rng.uniform(-4, 4, size=2)
        s = p.sum() / np.sqrt(2)  # signed distance to the plane
        if abs(s) >= 1:
            pts.append(p)
            labels.append(int(s > 0))
    return np.array(pts), np.array(labels)


def numeric_grads(layers, X, y, h=1e-5):
    out = []
    for w, b in layers:
        gs = []
        for param in (w, b):
            g = np.zeros_like(param)
            for idx in np.ndindex(param.shape):
                old = param[idx]
                param[idx] = old + h
                up = bce_loss(layers, X, y)
                param[idx] = old - h
                down = bce_loss(layers, X, y)
                param[idx] = old
                g[idx] = (up - down) / (2 * h)
            gs.append(g)
        out.append(tuple(gs))
    return out


def max_rel_error(analytic, numeric):
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-7)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradient_check(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(3, 6))
    y = np.array([0.0, 1.0, 1.0])
    layers = init_layers(6, MlpConfig(hidden_sizes=(5,)), rng)
    _, analytic = loss_and_grads(layers, X, y)
    assert max_rel_error(analytic, numeric_grads(layers, X, y)) < 1e-4


def test_gradient_check_two_hidden_layers():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(4, 3))
    y = np.array([1.0, 0.0, 1.0, 0.0])
    layers = init_layers(3, MlpConfig(hidden_sizes=(4, 3)), rng)
    _, analytic = loss_and_grads(layers, X, y)
    assert max_rel_error(analytic, numeric_grads(layers, X, y)) < 1e-4


def test_separable_toy():
    X, y = separable_toy()
    # the hand-chosen plane x0 + x1 = 0 separates the set
    assert np.all((X.sum(axis=1) > 0) == (y == 1))
    model = mlp_train(X, y, MlpConfig(hidden_sizes=(5,), learning_rate=0.5, epochs=200,
                                      batch_size=4, seed=0))
    assert np.all(mlp_decide(model, X) == y)


def test_memorizes_single_point():
    X = np.ones((8, 3))
    y = np.ones(8)
    scores = []
    rng = np.random.default_rng(0)
    layers = init_layers(3, MlpConfig(hidden_sizes=(4,)), rng)
    model = MlpModel(layers)
    for _ in range(200):
        _, grads = loss_and_grads(model.layers, X, y)
        for (w, b), (gw, gb) in zip(model.layers, grads):
            w -= 0.5 * gw
            b -= 0.5 * gb
        scores.append(mlp_score(model, X[0]))
    assert all(b > a for a, b in zip(scores, scores[1:]))
    assert scores[-1] > 0.95


def test_loss_non_increasing_full_batch():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(12, 4))
    y = (X[:, 0] > 0).astype(float)
    model = mlp_train(X, y, MlpConfig(hidden_sizes=(5,), learning_rate=0.001, epochs=100,
                                      batch_size=12, seed=3))
    h = np.asarray(model.history)
    assert np.all(np.diff(h) <= 0)


def test_deterministic():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 7))
    y = (X[:, 1] > 0).astype(int)
    cfg = MlpConfig(hidden_sizes=(6,), epochs=5, seed=42)
    a, b = mlp_train(X, y, cfg), mlp_train(X, y, cfg)
    for (wa, ba), (wb, bb) in zip(a.layers, b.layers):
        assert np.array_equal(wa, wb) and np.array_equal(ba, bb)
    c = mlp_train(X, y, MlpConfig(hidden_sizes=(6,), epochs=5, seed=43))
    assert not np.array_equal(a.layers[0][0], c.layers[0][0])


def test_zero_weights_score_half():
    model = MlpModel([(np.zeros((3, 4)), np.zeros(3)), (np.zeros((1, 3)), np.zeros(1))])
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(mlp_score(model, rng.normal(size=(5, 4))), 0.5)


def test_score_batch_order_invariant():
    rng = np.random.default_rng(3)
    model = MlpModel(init_layers(4, MlpConfig(hidden_sizes=(3,)), rng))
    X = rng.normal(size=(10, 4))
    perm = rng.permutation(10)
    np.testing.assert_array_equal(mlp_score(model, X)[perm], mlp_score(model, X[perm]))
    assert mlp_score(model, X[2]) == mlp_score(model, X[2:3])[0]


def test_score_saturates_without_overflow():
    rng = np.random.default_rng(4)
    model = MlpModel(init_layers(4, MlpConfig(hidden_sizes=(3,)), rng))
    with np.errstate(all="raise"):
        s = mlp_score(model, np.array([[1e6, -1e6, 1e6, -1e6], [-1e6] * 4]))
    assert np.all(np.isfinite(s)) and np.all((s >= 0) & (s <= 1))


@pytest.mark.parametrize("score, expected", [(0.5, ClassLabel.ATTACK), (0.49, ClassLabel.NORMAL),
                                             (0.51, ClassLabel.ATTACK)])
def test_decide_threshold(score, expected):
    # output bias set so that sigmoid(bias) == score
    bias = np.log(score / (1 - score))
    model = MlpModel([(np.zeros((1, 2)), np.array([bias]))])
    assert mlp_decide(model, np.zeros(2)) is expected


def test_decide_rejects_bad_threshold():
    model = MlpModel([(np.zeros((1, 2)), np.zeros(1))])
    with pytest.raises(ValueError):
        mlp_decide(model, np.zeros(2), threshold=1.0)


def test_dimension_errors():
    with pytest.raises(DimensionError):
        mlp_train(np.zeros((3, 2)), np.zeros(4))
    model = MlpModel([(np.zeros((1, 2)), np.zeros(1))])
    with pytest.raises(DimensionError):
        mlp_score(model, np.zeros(3))
    with pytest.raises(DimensionError):
        MlpModel([(np.zeros((3, 2)), np.zeros(3)), (np.zeros((1, 4)), np.zeros(1))])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reported():
    X = np.array([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(TrainingError) as info:
        mlp_train(X, np.array([0, 1]), MlpConfig(hidden_sizes=(2,), epochs=3))
    assert info.value.epoch == 1


def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 3))
    model = mlp_train(X, (X[:, 0] > 0).astype(int), MlpConfig(hidden_sizes=(4,), epochs=2))
    model.validation_pcc = 0.75
    path = tmp_path / "mlp.json"
    model.save(path)
    doc = json.loads(path.read_text())
    assert doc["shapes"] == [[4, 3], [1, 4]]
    loaded = MlpModel.load(path)
    assert loaded.validation_pcc == 0.75
    np.testing.assert_array_equal(mlp_score(loaded, X), mlp_score(model, X))


def test_load_rejects_bad_chain():
    doc = {"shapes": [[4, 3], [1, 5]], "weights": [[0.0] * 12, [0.0] * 5],
           "biases": [[0.0] * 4, [0.0]], "config": {}, "input_dim": 3}
    with pytest.raises(DimensionError):
        MlpModel.from_dict(doc)
