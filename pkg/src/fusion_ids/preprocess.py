"""Balancing, attack-family thinning, stratified splits, z-scoring and one-hot encoding.

Every sampling operation owns a fresh ``numpy.random.default_rng(seed)``, so a
given (dataset, seed) pair always yields the same selection.  Selected index
lists are returned sorted, which keeps record order stable.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from operator import itemgetter
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import BalanceError, SplitError
from .nslkdd import (
    CATEGORICAL_INDICES,
    NUMERIC_INDICES,
    SCHEMA,
    ClassLabel,
    ConnectionRecord,
    Dataset,
)

STD_FLOOR = 1e-9
PROBE_COUNT = 11656
DEFAULT_CAPS: dict[str, int] = {fam: PROBE_COUNT for fam in ("dos", "probe", "r2l", "u2r")}

_numeric_getter = itemgetter(*NUMERIC_INDICES)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 0
    attack_ratio: float = 0.5
    eval_size: int = 1000
    equal_thirds: bool = False

    def __post_init__(self):
        if not 0.0 < self.attack_ratio < 1.0:
            raise ValueError(f"attack_ratio must lie in (0, 1), got {self.attack_ratio}")
        if self.eval_size < 2:
            raise ValueError(f"eval_size must be >= 2, got {self.eval_size}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def _label_indices(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    labels = np.fromiter((r.label for r in ds.records), dtype=np.int8, count=len(ds))
    return np.flatnonzero(labels == ClassLabel.NORMAL), np.flatnonzero(labels == ClassLabel.ATTACK)


def balance(ds: Dataset, spec: SplitSpec) -> Dataset:
    """Downsample the majority class so attacks make up ``spec.attack_ratio``.

    The minority side (relative to the target ratio) is kept whole.  A dataset
    already at the target ratio comes back unchanged.
    """
    normal, attack = _label_indices(ds)
    if len(normal) == 0 or len(attack) == 0:
        starved = "normal" if len(normal) == 0 else "attack"
        raise BalanceError(f"cannot balance: no {starved} records")
    r = spec.attack_ratio
    rng = np.random.default_rng(spec.seed)
    want_attack = _round_half_up(len(normal) * r / (1 - r))
    if want_attack < len(attack):
        keep_normal = normal
        keep_attack = np.sort(rng.choice(attack, size=want_attack, replace=False))
    else:
        want_normal = min(len(normal), _round_half_up(len(attack) * (1 - r) / r))
        keep_attack = attack
        if want_normal < len(normal):
            keep_normal = np.sort(rng.choice(normal, size=want_normal, replace=False))
        else:
            keep_normal = normal
    if len(keep_normal) == len(normal) and len(keep_attack) == len(attack):
        return ds
    return ds.subset(np.sort(np.concatenate([keep_normal, keep_attack])).tolist())


def thin_attack_categories(
    ds: Dataset, caps: Mapping[str, int | float | None], seed: int
) -> Dataset:
    """Keep at most ``caps[family]`` attacks per family; normal traffic passes through.

    A cap of ``None`` or ``inf`` means unlimited.
    """
    rng = np.random.default_rng(seed)
    by_family: dict[str, list[int]] = {}
    for i, rec in enumerate(ds.records):
        if rec.label is ClassLabel.ATTACK:
            by_family.setdefault(rec.family, []).append(i)
    drop: set[int] = set()
    for family in sorted(by_family):
        cap = caps.get(family)
        if cap is None or math.isinf(cap):
            continue
        if cap <= 0:
            raise ValueError(f"cap for {family} must be positive")
        idx = by_family[family]
        if len(idx) > cap:
            keep = set(rng.choice(idx, size=int(cap), replace=False).tolist())
            drop.update(i for i in idx if i not in keep)
    if not drop:
        return ds
    return ds.subset(i for i in range(len(ds)) if i not in drop)


def _stratified_counts(size: int, ratio: float) -> tuple[int, int]:
    n_attack = _round_half_up(size * ratio)
    return size - n_attack, n_attack


def subsample(ds: Dataset, size: int, spec: SplitSpec) -> Dataset:
    """Stratified draw of ``size`` records at ``spec.attack_ratio``."""
    if size >= len(ds):
        return ds
    normal, attack = _label_indices(ds)
    n_norm, n_att = _stratified_counts(size, spec.attack_ratio)
    if n_norm > len(normal) or n_att > len(attack):
        raise BalanceError(f"cannot draw {size} records at ratio {spec.attack_ratio}")
    rng = np.random.default_rng(spec.seed)
    picked = np.concatenate([
        rng.choice(normal, size=n_norm, replace=False),
        rng.choice(attack, size=n_att, replace=False),
    ])
    return ds.subset(np.sort(picked).tolist())


@dataclass(frozen=True)
class SplitManifest:
    seed: int
    attack_ratio: float
    eval_size: int
    train_indices: tuple[int, ...]
    validation_indices: tuple[int, ...]
    test_indices: tuple[int, ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("train_indices", "validation_indices", "test_indices"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SplitManifest":
        return cls(
            seed=int(d["seed"]),
            attack_ratio=float(d["attack_ratio"]),
            eval_size=int(d["eval_size"]),
            train_indices=tuple(int(i) for i in d["train_indices"]),
            validation_indices=tuple(int(i) for i in d["validation_indices"]),
            test_indices=tuple(int(i) for i in d["test_indices"]),
        )

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SplitManifest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def apply(self, ds: Dataset) -> "DataSplits":
        n = len(self.train_indices) + len(self.validation_indices) + len(self.test_indices)
        if n != len(ds):
            raise SplitError(f"manifest covers {n} records but dataset has {len(ds)}")
        return DataSplits(
            ds.subset(self.train_indices),
            ds.subset(self.validation_indices),
            ds.subset(self.test_indices),
            self,
        )


@dataclass(frozen=True)
class DataSplits:
    train: Dataset
    validation: Dataset
    test: Dataset
    manifest: SplitManifest


def split(ds: Dataset, spec: SplitSpec) -> DataSplits:
    """Stratified validation and test draws of ``eval_size`` each; the rest is train.

    With ``spec.equal_thirds`` the evaluation size becomes ``len(ds) // 3``.
    """
    eval_size = len(ds) // 3 if spec.equal_thirds else spec.eval_size
    if eval_size < 2 or len(ds) < 2 * eval_size + 1:
        raise SplitError(
            f"need at least {2 * eval_size + 1} records for eval_size {eval_size}, got {len(ds)}"
        )
    normal, attack = _label_indices(ds)
    n_norm, n_att = _stratified_counts(eval_size, spec.attack_ratio)
    for name, have, need in (("normal", len(normal), n_norm), ("attack", len(attack), n_att)):
        if have < 2 * need:
            raise SplitError(f"class '{name}' has {have} records, stratified split needs {2 * need}")
    rng = np.random.default_rng(spec.seed)
    normal = rng.permutation(normal)
    attack = rng.permutation(attack)
    val = np.sort(np.concatenate([normal[:n_norm], attack[:n_att]]))
    test = np.sort(np.concatenate([normal[n_norm:2 * n_norm], attack[n_att:2 * n_att]]))
    train = np.sort(np.concatenate([normal[2 * n_norm:], attack[2 * n_att:]]))
    manifest = SplitManifest(
        spec.seed, spec.attack_ratio, eval_size,
        tuple(train.tolist()), tuple(val.tolist()), tuple(test.tolist()),
    )
    return manifest.apply(ds)


def prepare(
    ds: Dataset,
    spec: SplitSpec,
    caps: Mapping[str, int | float | None] | None = None,
    sample_size: int | None = None,
) -> tuple[Dataset, DataSplits]:
    """thin -> balance -> optional stratified subsample -> split.

    Returns the balanced dataset the manifest indexes into, plus the splits.
    """
    thinned = thin_attack_categories(ds, DEFAULT_CAPS if caps is None else caps, spec.seed)
    balanced = balance(thinned, spec)
    if sample_size is not None:
        balanced = subsample(balanced, sample_size, spec)
    return balanced, split(balanced, spec)


def numeric_matrix(ds: Dataset) -> np.ndarray:
    """Numeric (continuous and binary) features as an ``(n, 38)`` float array."""
    if len(ds) == 0:
        return np.empty((0, len(NUMERIC_INDICES)))
    return np.array([_numeric_getter(r.features) for r in ds.records], dtype=np.float64)


@dataclass(frozen=True)
class NormStats:
    indices: tuple[int, ...]
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "NormStats":
        return cls(tuple(d["indices"]), np.asarray(d["mean"], float), np.asarray(d["std"], float))


def fit_norm_stats(train: Dataset) -> NormStats:
    """Per-feature mean and population standard deviation, floored at ``STD_FLOOR``."""
    if len(train) == 0:
        raise ValueError("cannot fit normalization on an empty dataset")
    x = numeric_matrix(train)
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), STD_FLOOR)
    return NormStats(NUMERIC_INDICES, mean, std)


def apply_norm(ds: Dataset, stats: NormStats) -> Dataset:
    """Z-score the numeric features. Not idempotent: applying twice rescales twice."""
    if len(ds) == 0:
        return ds
    z = (numeric_matrix(ds) - stats.mean) / stats.std
    idx = stats.indices
    out = []
    for rec, row in zip(ds.records, z.tolist()):
        feats = list(rec.features)
        for i, v in zip(idx, row):
            feats[i] = v
        out.append(ConnectionRecord(tuple(feats), rec.label, rec.raw_label, rec.difficulty))
    return Dataset(tuple(out), ds.schema)


@dataclass(frozen=True)
class EncodingPlan:
    """Slot layout: features in schema order, categoricals expanded one-hot."""

    vocabularies: Mapping[int, tuple[str, ...]]
    slots: tuple[tuple[int, int, int], ...] = field(init=False)  # (feature, start, width)

    def __post_init__(self):
        slots, start = [], 0
        for desc in SCHEMA:
            width = len(self.vocabularies[desc.index]) if desc.index in CATEGORICAL_INDICES else 1
            slots.append((desc.index, start, width))
            start += width
        object.__setattr__(self, "slots", tuple(slots))
        object.__setattr__(self, "_lookup", {
            i: {s: k for k, s in enumerate(v)} for i, v in self.vocabularies.items()
        })

    @property
    def width(self) -> int:
        _, start, width = self.slots[-1]
        return start + width

    def to_dict(self) -> dict:
        return {"vocabularies": {str(k): list(v) for k, v in self.vocabularies.items()}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "EncodingPlan":
        return cls({int(k): tuple(v) for k, v in d["vocabularies"].items()})


def build_plan(train: Dataset) -> EncodingPlan:
    """Vocabularies (sorted) for each categorical feature, from the training split only."""
    vocab = {i: tuple(sorted({r.features[i] for r in train.records})) for i in CATEGORICAL_INDICES}
    return EncodingPlan(vocab)


@dataclass(frozen=True)
class EncodedVector:
    values: np.ndarray
    plan: EncodingPlan


def encode(rec: ConnectionRecord, plan: EncodingPlan) -> EncodedVector:
    values = np.zeros(plan.width)
    lookup = plan._lookup
    for index, start, _ in plan.slots:
        v = rec.features[index]
        if index in lookup:
            k = lookup[index].get(v)
            if k is not None:
                values[start + k] = 1.0
        else:
            values[start] = v
    return EncodedVector(values, plan)


def encode_dataset(ds: Dataset | Sequence[ConnectionRecord], plan: EncodingPlan) -> np.ndarray:
    """Encode many records into an ``(n, plan.width)`` matrix."""
    records = ds.records if isinstance(ds, Dataset) else tuple(ds)
    n = len(records)
    out = np.zeros((n, plan.width))
    if n == 0:
        return out
    numeric = np.array([_numeric_getter(r.features) for r in records], dtype=np.float64)
    lookup = plan._lookup
    numeric_cols = [start for index, start, _ in plan.slots if index not in lookup]
    out[:, numeric_cols] = numeric
    rows = np.arange(n)
    for index, start, _ in plan.slots:
        if index not in lookup:
            continue
        table = lookup[index]
        k = np.fromiter((table.get(r.features[index], -1) for r in records), dtype=np.int64, count=n)
        known = k >= 0
        out[rows[known], start + k[known]] = 1.0
    return out
