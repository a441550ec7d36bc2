"""Naive Bayes fusion of base-classifier decisions and packet features.

Each connection is described by a review vector of discrete symbols: the ANN
and SVM hard decisions plus any of the raw protocol/service/flag values.  The
combiner scores a class as

    log P(cl) + sum_i n_i * log P(w_i | cl)

and normalizes the two scores into a posterior.  Conditional tables use
Laplace smoothing with one reserved slot for symbols never seen in training:

    P(s | cl) = (count(s, cl) + alpha) / (count(cl) + alpha * (V + 1))

The exponent ``n_i`` defaults to 1; with PCC weighting, each decision feature
is raised to its classifier's validation accuracy instead.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import FusionError
from .mlp import MlpModel, mlp_decide
from .nslkdd import ClassLabel, ConnectionRecord, Dataset
from .preprocess import EncodingPlan, encode, encode_dataset
from .svm import SvmModel, svm_decide

ANN, SVM = "ann_decision", "svm_decision"
PACKET_FEATURES = ("protocol", "service", "flag")
CANONICAL_ORDER = (ANN, SVM, *PACKET_FEATURES)

FusionVector = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class FusionFeatureSet:
    use_ann: bool = True
    use_svm: bool = True
    packet_features: frozenset[str] = frozenset()

    def __post_init__(self):
        pf = frozenset(self.packet_features)
        unknown = pf - set(PACKET_FEATURES)
        if unknown:
            raise ValueError(f"unknown packet features: {sorted(unknown)}")
        object.__setattr__(self, "packet_features", pf)
        if not (self.use_ann or self.use_svm or pf):
            raise ValueError("a fusion feature set needs at least one feature")

    @property
    def feature_ids(self) -> tuple[str, ...]:
        active = {ANN: self.use_ann, SVM: self.use_svm}
        active.update({f: f in self.packet_features for f in PACKET_FEATURES})
        return tuple(f for f in CANONICAL_ORDER if active[f])

    @property
    def name(self) -> str:
        base = "+".join(n for n, on in (("ANN", self.use_ann), ("SVM", self.use_svm)) if on)
        if not self.packet_features:
            return base
        names = [f for f in ("flag", "service", "protocol") if f in self.packet_features]
        listed = names[0] if len(names) == 1 else ", ".join(names[:-1]) + " and " + names[-1]
        noun = "feature" if len(names) == 1 else "features"
        return f"{base}+({listed} {noun})" if base else f"({listed} {noun})"

    def to_dict(self) -> dict:
        return {"use_ann": self.use_ann, "use_svm": self.use_svm,
                "packet_features": sorted(self.packet_features)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FusionFeatureSet":
        return cls(bool(d.get("use_ann", False)), bool(d.get("use_svm", False)),
                   frozenset(d.get("packet_features", ())))


def _packet_symbol(rec: ConnectionRecord, fid: str) -> str:
    return {"protocol": rec.protocol, "service": rec.service, "flag": rec.flag}[fid]


def build_fusion_vector(
    rec: ConnectionRecord,
    ann: MlpModel | None,
    svm: SvmModel | None,
    fs: FusionFeatureSet,
    plan: EncodingPlan | None,
) -> FusionVector:
    """Review vector for one (already normalized) record."""
    x = None
    out = []
    for fid in fs.feature_ids:
        if fid in (ANN, SVM):
            model = ann if fid == ANN else svm
            if model is None:
                raise FusionError(f"feature set enables {fid} but no model was given")
            if plan is None:
                raise FusionError("an encoding plan is needed for classifier decisions")
            if x is None:
                x = encode(rec, plan).values
            label = mlp_decide(model, x) if fid == ANN else svm_decide(model, x)
            out.append((fid, label.symbol))
        else:
            out.append((fid, _packet_symbol(rec, fid)))
    return tuple(out)


def build_fusion_vectors(
    ds: Dataset,
    ann: MlpModel | None,
    svm: SvmModel | None,
    fs: FusionFeatureSet,
    plan: EncodingPlan | None = None,
    X: np.ndarray | None = None,
) -> list[FusionVector]:
    """Batch form of :func:`build_fusion_vector`; pass ``X`` to reuse an encoding."""
    decisions: dict[str, np.ndarray] = {}
    for fid, model, decide in ((ANN, ann, mlp_decide), (SVM, svm, svm_decide)):
        if fid not in fs.feature_ids:
            continue
        if model is None:
            raise FusionError(f"feature set enables {fid} but no model was given")
        if X is None:
            if plan is None:
                raise FusionError("an encoding plan is needed for classifier decisions")
            X = encode_dataset(ds, plan)
        decisions[fid] = decide(model, X)
    symbols = {0: "normal", 1: "attack"}
    out = []
    for i, rec in enumerate(ds.records):
        vec = []
        for fid in fs.feature_ids:
            if fid in decisions:
                vec.append((fid, symbols[int(decisions[fid][i])]))
            else:
                vec.append((fid, _packet_symbol(rec, fid)))
        out.append(tuple(vec))
    return out


@dataclass
class NbFusionModel:
    feature_ids: tuple[str, ...]
    priors: dict[ClassLabel, float]
    vocabularies: dict[str, tuple[str, ...]]
    cond_tables: dict[str, dict[ClassLabel, dict[str, float]]]
    unseen: dict[str, dict[ClassLabel, float]]
    alpha: float = 1.0
    weights: dict[str, float] = field(default_factory=dict)

    def log_tables(self) -> tuple[np.ndarray, np.ndarray, list[dict[str, int]]]:
        """Dense ``(k, 2, max V + 1)`` log-probability array, log priors and symbol codes.

        Code ``V_i`` of feature ``i`` is its unseen-symbol slot.
        """
        width = max(len(self.vocabularies[f]) for f in self.feature_ids) + 1
        logp = np.zeros((len(self.feature_ids), 2, width))
        codes = []
        for j, fid in enumerate(self.feature_ids):
            vocab = self.vocabularies[fid]
            codes.append({s: k for k, s in enumerate(vocab)})
            for cl in ClassLabel:
                row = self.cond_tables[fid][cl]
                logp[j, cl, :len(vocab)] = [math.log(row[s]) for s in vocab]
                logp[j, cl, len(vocab)] = math.log(self.unseen[fid][cl])
        logprior = np.array([math.log(self.priors[cl]) for cl in ClassLabel])
        return logp, logprior, codes

    def weight_vector(self) -> np.ndarray:
        return np.array([self.weights.get(f, 1.0) for f in self.feature_ids])

    def to_dict(self) -> dict:
        return {
            "kind": "nb_fusion",
            "feature_ids": list(self.feature_ids),
            "priors": {cl.symbol: p for cl, p in self.priors.items()},
            "alpha": self.alpha,
            "weights": {f: self.weights.get(f, 1.0) for f in self.feature_ids},
            "features": {
                fid: {
                    "vocabulary": list(self.vocabularies[fid]),
                    "cond": {cl.symbol: [self.cond_tables[fid][cl][s] for s in self.vocabularies[fid]]
                             for cl in ClassLabel},
                    "unseen": {cl.symbol: self.unseen[fid][cl] for cl in ClassLabel},
                }
                for fid in self.feature_ids
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "NbFusionModel":
        by_symbol = {cl.symbol: cl for cl in ClassLabel}
        feats = d["features"]
        vocabularies = {f: tuple(feats[f]["vocabulary"]) for f in d["feature_ids"]}
        cond = {
            f: {by_symbol[c]: dict(zip(vocabularies[f], probs)) for c, probs in feats[f]["cond"].items()}
            for f in d["feature_ids"]
        }
        unseen = {f: {by_symbol[c]: p for c, p in feats[f]["unseen"].items()} for f in d["feature_ids"]}
        return cls(
            tuple(d["feature_ids"]),
            {by_symbol[c]: p for c, p in d["priors"].items()},
            vocabularies, cond, unseen, float(d["alpha"]), dict(d["weights"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NbFusionModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _feature_ids(v: FusionVector) -> tuple[str, ...]:
    return tuple(fid for fid, _ in v)


def nb_fit(
    vectors: Sequence[FusionVector],
    labels: Sequence[int],
    alpha: float = 1.0,
    weights: Mapping[str, float] | None = None,
) -> NbFusionModel:
    if alpha <= 0:
        raise FusionError(f"alpha must be positive, got {alpha}")
    if len(vectors) == 0:
        raise FusionError("cannot fit on an empty training set")
    if len(vectors) != len(labels):
        raise FusionError(f"{len(vectors)} vectors but {len(labels)} labels")
    fids = _feature_ids(vectors[0])
    weights = dict(weights or {})
    for fid, wt in weights.items():
        if fid not in fids:
            raise FusionError(f"weight given for inactive feature {fid}")
        if wt < 0:
            raise FusionError(f"weight for {fid} must be >= 0")
    class_n = {cl: 0 for cl in ClassLabel}
    counts: dict[str, dict[ClassLabel, dict[str, int]]] = {
        f: {cl: {} for cl in ClassLabel} for f in fids
    }
    for v, y in zip(vectors, labels):
        if _feature_ids(v) != fids:
            raise FusionError(f"inconsistent feature ids: {_feature_ids(v)} vs {fids}")
        cl = ClassLabel(int(y))
        class_n[cl] += 1
        for fid, sym in v:
            table = counts[fid][cl]
            table[sym] = table.get(sym, 0) + 1
    n = len(vectors)
    priors = {cl: (class_n[cl] + alpha) / (n + 2 * alpha) for cl in ClassLabel}
    vocabularies, cond, unseen = {}, {}, {}
    for fid in fids:
        vocab = tuple(sorted(set(counts[fid][ClassLabel.NORMAL]) | set(counts[fid][ClassLabel.ATTACK])))
        vocabularies[fid] = vocab
        cond[fid], unseen[fid] = {}, {}
        for cl in ClassLabel:
            denom = class_n[cl] + alpha * (len(vocab) + 1)
            cond[fid][cl] = {s: (counts[fid][cl].get(s, 0) + alpha) / denom for s in vocab}
            unseen[fid][cl] = alpha / denom
    return NbFusionModel(fids, priors, vocabularies, cond, unseen, alpha,
                         {f: float(weights.get(f, 1.0)) for f in fids})


def _log_joint(model: NbFusionModel, v: FusionVector) -> dict[ClassLabel, float]:
    if _feature_ids(v) != model.feature_ids:
        raise FusionError(f"vector features {_feature_ids(v)} do not match model {model.feature_ids}")
    out = {}
    for cl in ClassLabel:
        s = math.log(model.priors[cl])
        for fid, sym in v:
            p = model.cond_tables[fid][cl].get(sym, model.unseen[fid][cl])
            s += model.weights.get(fid, 1.0) * math.log(p)
        out[cl] = s
    return out


def _normalize(log_normal, log_attack):
    m = np.maximum(log_normal, log_attack)
    en, ea = np.exp(log_normal - m), np.exp(log_attack - m)
    z = en + ea
    return en / z, ea / z


def nb_posterior(model: NbFusionModel, v: FusionVector) -> dict[ClassLabel, float]:
    lj = _log_joint(model, v)
    pn, pa = _normalize(lj[ClassLabel.NORMAL], lj[ClassLabel.ATTACK])
    return {ClassLabel.NORMAL: float(pn), ClassLabel.ATTACK: float(pa)}


def nb_decide(model: NbFusionModel, v: FusionVector) -> ClassLabel:
    """Most probable class; an exact tie goes to attack."""
    lj = _log_joint(model, v)
    return ClassLabel.ATTACK if lj[ClassLabel.ATTACK] >= lj[ClassLabel.NORMAL] else ClassLabel.NORMAL


def encode_vectors(model: NbFusionModel, vectors: Iterable[FusionVector], codes: list[dict[str, int]]):
    rows = []
    k = len(model.feature_ids)
    for v in vectors:
        if _feature_ids(v) != model.feature_ids:
            raise FusionError(f"vector features {_feature_ids(v)} do not match model {model.feature_ids}")
        rows.append([codes[j].get(sym, len(codes[j])) for j, (_, sym) in enumerate(v)])
    return np.asarray(rows, dtype=np.int64).reshape(-1, k)


def nb_posterior_batch(model: NbFusionModel, vectors: Sequence[FusionVector], backend=None) -> np.ndarray:
    """``(n, 2)`` posteriors, columns ordered (normal, attack)."""
    logp, logprior, codes = model.log_tables()
    lj = kernels.nb_log_joint(encode_vectors(model, vectors, codes), logp,
                              model.weight_vector(), logprior, backend=backend)
    pn, pa = _normalize(lj[:, 0], lj[:, 1])
    return np.column_stack([pn, pa])


def nb_decide_batch(model: NbFusionModel, vectors: Sequence[FusionVector], backend=None) -> np.ndarray:
    logp, logprior, codes = model.log_tables()
    lj = kernels.nb_log_joint(encode_vectors(model, vectors, codes), logp,
                              model.weight_vector(), logprior, backend=backend)
    return (lj[:, 1] >= lj[:, 0]).astype(np.int8)
