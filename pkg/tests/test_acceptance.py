"""Acceptance criteria, one test each.

Each test carries a ``criterion`` marker; the terminal summary prints one
``[PASS]``/``[FAIL]`` line per criterion.  The two data-bound criteria need
KDDTrain+.txt (``$NSLKDD_TRAIN`` or ``data/KDDTrain+.txt``) and fail, rather
than skip, when it is missing.
"""
import itertools
import json
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from fusion_ids.cli import main
from fusion_ids.evalkit import ClassLabel, pcc, tally
from fusion_ids.experiment import ExperimentConfig, builtin_config_path, run_experiment
from fusion_ids.fusion import nb_decide, nb_fit, nb_posterior
from fusion_ids.mlp import MlpConfig, init_layers, loss_and_grads
from fusion_ids.nslkdd import class_counts, read_dataset
from fusion_ids.preprocess import SplitSpec, split
from fusion_ids.svm import objective, objective_grad, signed_labels
from fusion_ids.synth import write_synthetic

from conftest import make_dataset, nslkdd_train_path
from test_fusion import brute_force_posterior, random_training
from test_mlp import max_rel_error, numeric_grads

N, A = ClassLabel.NORMAL, ClassLabel.ATTACK


def _require_kddtrain():
    path = nslkdd_train_path()
    if path is None:
        pytest.fail("KDDTrain+.txt not found: set NSLKDD_TRAIN or place it at data/KDDTrain+.txt")
    return path


@pytest.mark.criterion("Parser fidelity: KDDTrain+ gives 125973 / 67343 normal / 58630 attack in < 10 s")
def test_parser_fidelity():
    path = _require_kddtrain()
    start = time.perf_counter()
    ds = read_dataset(path)
    elapsed = time.perf_counter() - start
    assert len(ds) == 125973
    assert class_counts(ds) == (67343, 58630)
    assert elapsed < 10.0


@pytest.mark.slow
@pytest.mark.criterion("Six-row reproduction: TPR in 70-90% for all rows, a fusion FPR below both bases, <= 15 min")
def test_six_row_reproduction():
    path = _require_kddtrain()
    cfg = ExperimentConfig.load(builtin_config_path("paper_table3"))
    start = time.perf_counter()
    report = run_experiment(cfg, datasets=[str(path)])
    elapsed = time.perf_counter() - start
    rows = [(r.name, r.metrics()) for r in report.rows]
    summary = "; ".join(f"{n}: TPR {100 * m['tpr']:.2f} FPR {100 * m['fpr']:.2f}" for n, m in rows)
    assert len(rows) == 6
    assert all(0.70 <= m["tpr"] <= 0.90 for _, m in rows), summary
    base = [m["fpr"] for (n, m), r in zip(rows, report.rows) if r.kind == "base"]
    fused = [m["fpr"] for (n, m), r in zip(rows, report.rows) if r.kind == "fusion"]
    assert any(f < min(base) for f in fused), summary
    assert elapsed <= 15 * 60


@pytest.mark.criterion("PCC oracle: 1000 random confusion matrices match an exact recount")
def test_pcc_oracle():
    rng = np.random.default_rng(20180)
    for _ in range(1000):
        n = int(rng.integers(1, 500))
        truth = rng.integers(0, 2, size=n)
        pred = rng.integers(0, 2, size=n)
        correct = sum(1 for p, t in zip(pred.tolist(), truth.tolist()) if p == t)
        cm = tally([ClassLabel(p) for p in pred.tolist()], [ClassLabel(t) for t in truth.tolist()])
        assert cm.tp + cm.tn == correct and cm.total == n
        assert Fraction(pcc(cm)) == Fraction(float(Fraction(correct, n)))


@pytest.mark.criterion("Naive Bayes brute force: every vector over <= 3 features, vocabularies <= 3, within 1e-10")
def test_nb_brute_force():
    rng = np.random.default_rng(7)
    checked = 0
    for k in (1, 2, 3):
        for sizes in itertools.product((1, 2, 3), repeat=k):
            for _ in range(3):
                fids, vocabs, train, labels = random_training(rng, k, list(sizes), int(rng.integers(2, 25)))
                alpha = float(rng.uniform(0.1, 2.0))
                weights = {f: float(rng.uniform(0.0, 2.0)) for f in fids}
                model = nb_fit(train, labels, alpha, weights)
                for combo in itertools.product(*[v + ["<unseen>"] for v in vocabs]):
                    vector = tuple(zip(fids, combo))
                    pn, pa = brute_force_posterior(train, labels, vector, alpha, weights)
                    post = nb_posterior(model, vector)
                    assert abs(post[N] - pn) <= 1e-10 and abs(post[A] - pa) <= 1e-10
                    checked += 1
    assert checked > 0


@pytest.mark.criterion("Posterior normalization: 10000 (model, vector) pairs sum to 1 within 1e-12")
def test_posterior_normalization():
    rng = np.random.default_rng(11)
    pairs = 0
    while pairs < 10000:
        k = int(rng.integers(1, 6))
        sizes = [int(rng.integers(1, 6)) for _ in range(k)]
        fids, vocabs, train, labels = random_training(rng, k, sizes, int(rng.integers(1, 60)))
        weights = {f: float(rng.uniform(0.0, 3.0)) for f in fids}
        model = nb_fit(train, labels, float(rng.uniform(0.01, 5.0)), weights)
        for _ in range(100):
            v = tuple((f, (voc + ["<unseen>"])[int(rng.integers(0, len(voc) + 1))])
                      for f, voc in zip(fids, vocabs))
            post = nb_posterior(model, v)
            assert abs(post[N] + post[A] - 1.0) <= 1e-12
            pairs += 1


@pytest.mark.criterion("MLP gradient check: 5 hidden units, 3 samples, relative error < 1e-4")
def test_mlp_gradient_check():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(3, 8))
    y = np.array([1.0, 0.0, 1.0])
    layers = init_layers(8, MlpConfig(hidden_sizes=(5,)), rng)
    _, analytic = loss_and_grads(layers, X, y)
    assert max_rel_error(analytic, numeric_grads(layers, X, y)) < 1e-4


@pytest.mark.criterion("SVM subgradient check at differentiable points: relative error < 1e-5")
def test_svm_subgradient_check():
    rng = np.random.default_rng(4)
    lam, h = 0.01, 1e-6
    for _ in range(20):
        X = rng.normal(size=(30, 5))
        ys = signed_labels(rng.integers(0, 2, size=30))
        while True:
            w, b = rng.normal(size=5), float(rng.normal())
            if np.min(np.abs(ys * (X @ w + b) - 1.0)) > 1e-3:
                break
        gw, gb = objective_grad(w, b, X, ys, lam)
        num = []
        for j in range(6):
            e = np.zeros(6)
            e[j] = h
            up = objective(w + e[:5], b + e[5], X, ys, lam)
            down = objective(w - e[:5], b - e[5], X, ys, lam)
            num.append((up - down) / (2 * h))
        analytic, numeric = np.append(gw, gb), np.array(num)
        # whole-vector relative error; a component can be exactly zero
        rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic), np.linalg.norm(numeric))
        assert rel < 1e-5


@pytest.mark.criterion("Determinism: repeated experiment runs give byte-identical confusion matrices")
def test_determinism(tmp_path):
    data = tmp_path / "synth.txt"
    write_synthetic(data, counts={"normal": 2000, "dos": 900, "probe": 500, "r2l": 150, "u2r": 50}, seed=1)
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["experiment", "--config", "paper_table3", "--data", str(data), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        blobs.append(json.dumps([r["confusion"] for r in report["rows"]], sort_keys=True).encode())
        blobs.append((out / "report.csv").read_bytes())
    assert blobs[0] == blobs[2] and blobs[1] == blobs[3]


@pytest.mark.criterion("Split integrity: 200 random SplitSpec draws, zero violations")
def test_split_integrity():
    rng = np.random.default_rng(99)
    violations = []
    for _ in range(200):
        eval_size = int(rng.integers(2, 60))
        ratio = float(rng.uniform(0.2, 0.8))
        spec = SplitSpec(seed=int(rng.integers(0, 2**63)), attack_ratio=ratio, eval_size=eval_size)
        n_norm = int(rng.integers(2 * eval_size, 6 * eval_size))
        n_att = int(rng.integers(2 * eval_size, 6 * eval_size))
        ds = make_dataset(n_norm, n_att)
        s = split(ds, spec)
        m = s.manifest
        parts = [set(m.train_indices), set(m.validation_indices), set(m.test_indices)]
        if any(a & b for a, b in itertools.combinations(parts, 2)):
            violations.append(("overlap", spec))
        if set().union(*parts) != set(range(len(ds))):
            violations.append(("coverage", spec))
        for part in (s.validation, s.test):
            if len(part) != eval_size:
                violations.append(("size", spec))
            if abs(class_counts(part).attack / eval_size - ratio) > 1 / eval_size:
                violations.append(("stratification", spec))
    assert violations == []


@pytest.mark.criterion("Argmax weight invariance: scaling all NB weights by c > 0 keeps nb_decide on 1000 vectors")
def test_argmax_weight_invariance():
    # models are fit on class-balanced training sets, as every experiment run is
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        k = int(rng.integers(1, 6))
        sizes = [int(rng.integers(1, 5)) for _ in range(k)]
        fids, vocabs, train, _ = random_training(rng, k, sizes, 2 * int(rng.integers(1, 30)))
        labels = [i % 2 for i in range(len(train))]
        model = nb_fit(train, labels, float(rng.uniform(0.05, 3.0)),
                       {f: float(rng.uniform(0.0, 2.0)) for f in fids})
        c = float(np.exp(rng.uniform(-5, 5)))
        scaled = replace(model, weights={f: w * c for f, w in model.weights.items()})
        v = tuple((f, (voc + ["<unseen>"])[int(rng.integers(0, len(voc) + 1))])
                  for f, voc in zip(fids, vocabs))
        assert nb_decide(model, v) == nb_decide(scaled, v)
