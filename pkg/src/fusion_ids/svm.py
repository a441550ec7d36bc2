"""Linear SVM trained with Pegasos-style stochastic subgradient steps.

Objective: ``(lambda/2) * ||w||^2 + mean(max(0, 1 - y (w.x + b)))`` with labels
remapped to -1 (normal) / +1 (attack).  Step ``t`` uses rate ``1/(lambda t)``;
the bias is left unregularized.  With projection enabled, ``w`` is pulled back
into the ball of radius ``1/sqrt(lambda)`` after every step.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DimensionError, TrainingError
from .nslkdd import ClassLabel


@dataclass(frozen=True)
class SvmConfig:
    lam: float = 1e-4
    epochs: int = 20
    seed: int = 0
    project: bool = True

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class SvmModel:
    weights: np.ndarray
    bias: float = 0.0
    config: SvmConfig = field(default_factory=SvmConfig)
    validation_pcc: float | None = None

    @property
    def input_dim(self) -> int:
        return self.weights.shape[0]

    def to_dict(self) -> dict:
        return {
            "kind": "svm",
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "lambda": self.config.lam,
            "epochs": self.config.epochs,
            "seed": self.config.seed,
            "project": self.config.project,
            "validation_pcc": self.validation_pcc,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        cfg = SvmConfig(lam=d["lambda"], epochs=d["epochs"], seed=d["seed"],
                        project=d.get("project", True))
        return cls(np.asarray(d["weights"], float), float(d["bias"]), cfg, d.get("validation_pcc"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SvmModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def signed_labels(y) -> np.ndarray:
    """0/1 labels to -1/+1."""
    return 2.0 * np.asarray(y, dtype=np.float64) - 1.0


def objective(w: np.ndarray, b: float, X: np.ndarray, ys: np.ndarray, lam: float) -> float:
    margins = ys * (X @ w + b)
    return 0.5 * lam * float(w @ w) + float(np.mean(np.maximum(0.0, 1.0 - margins)))


def objective_grad(w: np.ndarray, b: float, X: np.ndarray, ys: np.ndarray, lam: float):
    """(d/dw, d/db) of :func:`objective`; a subgradient where some margin equals 1."""
    active = ys * (X @ w + b) < 1.0
    coef = np.where(active, -ys, 0.0) / X.shape[0]
    return lam * w + coef @ X, float(coef.sum())


def _check(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionError("training data must be a non-empty 2-D array")
    if y.shape != (X.shape[0],):
        raise DimensionError(f"{X.shape[0]} vectors but {y.shape} labels")
    return X, y


def svm_train(X, y, cfg: SvmConfig = SvmConfig(), backend: str | None = None) -> SvmModel:
    """Fit on rows of ``X`` with 0/1 labels ``y`` (1 = attack).

    Each epoch visits every sample once in a seeded random order.
    """
    X, y = _check(X, y)
    ys = signed_labels(y)
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(X.shape[1])
    b, t = 0.0, 1
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(X.shape[0])
        b, t = kernels.pegasos_epoch(X, ys, order, w, b, t, cfg.lam, cfg.project, backend=backend)
        if not (np.isfinite(w).all() and math.isfinite(b)):
            raise TrainingError("non-finite weights", epoch)
    return SvmModel(w, float(b), cfg)


def svm_objective_trace(X, y, cfg: SvmConfig = SvmConfig(), backend: str | None = None) -> np.ndarray:
    """Regularized objective on the full set after every single step (diagnostics)."""
    X, y = _check(X, y)
    ys = signed_labels(y)
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(X.shape[1])
    b, t = 0.0, 1
    trace = []
    for _ in range(cfg.epochs):
        for i in rng.permutation(X.shape[0]):
            b, t = kernels.pegasos_epoch(X, ys, [i], w, b, t, cfg.lam, cfg.project, backend=backend)
            trace.append(objective(w, b, X, ys, cfg.lam))
    return np.asarray(trace)


def svm_margin(model: SvmModel, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise DimensionError(f"expected {model.input_dim} inputs, got {x.shape[-1]}")
    m = x @ model.weights + model.bias
    return float(m) if x.ndim == 1 else m


def svm_decide(model: SvmModel, x):
    """Attack iff margin >= 0. Returns a ClassLabel, or a 0/1 array for batches."""
    m = svm_margin(model, x)
    if isinstance(m, float):
        return ClassLabel.ATTACK if m >= 0.0 else ClassLabel.NORMAL
    return (m >= 0.0).astype(np.int8)
