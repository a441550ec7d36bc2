"""Confusion matrices and the PCC / TPR / FPR metrics.

Cell naming follows the source convention in which the *normal* class is
positive:

* tp - truth normal, predicted normal
* tn - truth attack, predicted attack
* fp - truth normal, predicted attack
* fn - truth attack, predicted normal

Passing ``positive_class=ClassLabel.ATTACK`` swaps tp<->tn and fp<->fn.
Rates are ``tpr = tp / (tp + fn)`` and ``fpr = fp / (fp + tn)``; an empty
denominator raises :class:`RateError` rather than reporting zero.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import RateError
from .kernels import confusion_counts
from .nslkdd import ClassLabel


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def swapped(self) -> "ConfusionMatrix":
        """The same predictions viewed with the other class as positive."""
        return ConfusionMatrix(tp=self.tn, tn=self.tp, fp=self.fn, fn=self.fp)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Metrics:
    pcc: float
    tpr: float
    fpr: float

    def to_dict(self) -> dict:
        return asdict(self)


def tally(
    predictions: Sequence[int],
    truths: Sequence[int],
    positive_class: ClassLabel = ClassLabel.NORMAL,
) -> ConfusionMatrix:
    pred = np.asarray(predictions, dtype=np.int64)
    truth = np.asarray(truths, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape[0]} predictions, {truth.shape[0]} truths")
    if pred.size == 0:
        raise ValueError("cannot tally an empty prediction list")
    # counts[truth * 2 + pred]; label 0 = normal, 1 = attack
    nn, na, an, aa = (int(c) for c in confusion_counts(truth, pred))
    cm = ConfusionMatrix(tp=nn, tn=aa, fp=na, fn=an)
    return cm if positive_class is ClassLabel.NORMAL else cm.swapped()


def pcc(cm: ConfusionMatrix) -> float:
    """Fraction of correct classifications, (tp + tn) / total."""
    if cm.total == 0:
        raise RateError("PCC undefined for an empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total


def rates(cm: ConfusionMatrix) -> Metrics:
    if cm.tp + cm.fn == 0:
        raise RateError("TPR undefined: tp + fn population is empty")
    if cm.fp + cm.tn == 0:
        raise RateError("FPR undefined: fp + tn population is empty")
    return Metrics(pcc=pcc(cm), tpr=cm.tp / (cm.tp + cm.fn), fpr=cm.fp / (cm.fp + cm.tn))


def pct(x: float | None) -> str:
    return "" if x is None else f"{100.0 * x:.2f}"


def pct_value(x: float | None) -> float | None:
    return None if x is None else round(100.0 * x, 2)


CSV_HEADER = ("classifier", "tpr", "fpr", "pcc")


def metrics_csv_row(name: str, m: Metrics) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([name, pct(m.tpr), pct(m.fpr), pct(m.pcc)])
    return buf.getvalue()


def metrics_json(name: str, m: Metrics) -> str:
    return json.dumps(
        {"classifier": name, "tpr": pct_value(m.tpr), "fpr": pct_value(m.fpr), "pcc": pct_value(m.pcc)}
    )
