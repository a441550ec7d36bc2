import numpy as np
import pytest

from fusion_ids.errors import DimensionError
from fusion_ids.nslkdd import ClassLabel
from fusion_ids.svm import (
    SvmConfig,
    SvmModel,
    objective,
    objective_grad,
    signed_labels,
    svm_decide,
    svm_margin,
    svm_objective_trace,
    svm_train,
)

from test_mlp import separable_toy


def hinge_losses(model, X, y):
    return np.maximum(0.0, 1.0 - signed_labels(y) * svm_margin(model, X))


def test_separable_zero_hinge():
    X, y = separable_toy()
    assert np.all((X.sum(axis=1) > 0) == (y == 1))  # hand-chosen separator
    model = svm_train(X, y, SvmConfig(lam=1e-3, epochs=300, seed=0))
    assert np.all(hinge_losses(model, X, y) == 0.0)
    assert np.all(svm_decide(model, X) == y)


def test_all_attack_labels():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 4))
    model = svm_train(X, np.ones(30, dtype=int), SvmConfig(epochs=5))
    assert np.all(svm_margin(model, X) > 0)


def test_deterministic():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 5))
    y = (X[:, 0] > 0).astype(int)
    a = svm_train(X, y, SvmConfig(seed=7))
    b = svm_train(X, y, SvmConfig(seed=7))
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_margin_basics():
    zero = SvmModel(np.zeros(3), 0.0)
    assert svm_margin(zero, np.array([5.0, -2.0, 1.0])) == 0.0
    e1 = SvmModel(np.array([1.0, 0.0, 0.0]), 0.0)
    assert svm_margin(e1, np.array([3.0, 9.0, -4.0])) == 3.0


def test_margin_linearity():
    rng = np.random.default_rng(2)
    model = SvmModel(rng.normal(size=4), 0.7)
    x1, x2 = rng.normal(size=4), rng.normal(size=4)
    lhs = svm_margin(model, x1 + x2) + svm_margin(model, np.zeros(4))
    assert lhs == pytest.approx(svm_margin(model, x1) + svm_margin(model, x2), abs=1e-12)


@pytest.mark.parametrize("bias, expected", [(0.0, ClassLabel.ATTACK), (-0.1, ClassLabel.NORMAL),
                                            (0.1, ClassLabel.ATTACK)])
def test_decide_boundary(bias, expected):
    assert svm_decide(SvmModel(np.zeros(2), bias), np.zeros(2)) is expected


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        svm_margin(SvmModel(np.zeros(3)), np.zeros(4))
    with pytest.raises(DimensionError):
        svm_train(np.zeros((3, 2)), np.zeros(2))


def test_config_validation():
    with pytest.raises(ValueError):
        SvmConfig(lam=0.0)
    with pytest.raises(ValueError):
        SvmConfig(epochs=0)


def _differentiable_point(rng, X, ys):
    while True:
        w, b = rng.normal(size=X.shape[1]), float(rng.normal())
        if np.min(np.abs(ys * (X @ w + b) - 1.0)) > 1e-3:
            return w, b


@pytest.mark.parametrize("seed", range(5))
def test_subgradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(25, 6))
    ys = signed_labels(rng.integers(0, 2, size=25))
    lam = 0.05
    w, b = _differentiable_point(rng, X, ys)
    gw, gb = objective_grad(w, b, X, ys, lam)
    h = 1e-6
    num_w = np.empty_like(w)
    for j in range(len(w)):
        e = np.zeros_like(w)
        e[j] = h
        num_w[j] = (objective(w + e, b, X, ys, lam) - objective(w - e, b, X, ys, lam)) / (2 * h)
    num_b = (objective(w, b + h, X, ys, lam) - objective(w, b - h, X, ys, lam)) / (2 * h)
    analytic = np.append(gw, gb)
    numeric = np.append(num_w, num_b)
    rel = np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    assert rel.max() < 1e-5


def test_objective_decreases():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 3))
    y = (X @ np.array([1.0, -2.0, 0.5]) + 0.3 * rng.normal(size=40) > 0).astype(int)
    trace = svm_objective_trace(X, y, SvmConfig(lam=0.01, epochs=10, seed=1))
    q = len(trace) // 4
    assert trace[-q:].mean() < trace[:q].mean()


def test_projection_bounds_norm():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 5)) * 10
    y = rng.integers(0, 2, size=60)
    for lam in (1e-2, 1e-4):
        cfg = SvmConfig(lam=lam, epochs=3, seed=0)
        for epochs in (1, 2, 3):
            model = svm_train(X, y, SvmConfig(lam=lam, epochs=epochs, seed=cfg.seed))
            assert np.linalg.norm(model.weights) <= 1 / np.sqrt(lam) * (1 + 1e-12)


def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    X = rng.normal(size=(20, 3))
    model = svm_train(X, (X[:, 0] > 0).astype(int), SvmConfig(epochs=2, seed=9))
    model.validation_pcc = 0.9
    path = tmp_path / "svm.json"
    model.save(path)
    loaded = SvmModel.load(path)
    assert np.array_equal(loaded.weights, model.weights) and loaded.bias == model.bias
    assert loaded.config == model.config and loaded.validation_pcc == 0.9
