"""Feed-forward sigmoid network trained by backpropagation (the ANN base detector).

Sigmoid hidden and output units, mean binary cross-entropy, plain mini-batch
SGD.  Weights start uniform in +-1/sqrt(fan_in); the same seed drives the
initialisation and the per-epoch shuffles, so training is bit-reproducible.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, TrainingError
from .nslkdd import ClassLabel


def sigmoid(z):
    # tanh form does not overflow for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True)
class MlpConfig:
    hidden_sizes: tuple[int, ...] = (40,)
    learning_rate: float = 0.01
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if any(h <= 0 for h in self.hidden_sizes):
            raise ValueError("hidden layer sizes must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")


Layer = tuple[np.ndarray, np.ndarray]  # (weights [out x in], bias [out])


@dataclass
class MlpModel:
    layers: list[Layer]
    config: MlpConfig = field(default_factory=MlpConfig)
    validation_pcc: float | None = None
    history: list[float] = field(default_factory=list, compare=False)

    def __post_init__(self):
        dim = self.layers[0][0].shape[1]
        for w, b in self.layers:
            if w.ndim != 2 or w.shape[1] != dim or b.shape != (w.shape[0],):
                raise DimensionError(f"layer shapes do not chain: {w.shape}, {b.shape}")
            dim = w.shape[0]
        if dim != 1:
            raise DimensionError(f"output layer must have one unit, got {dim}")

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[1]

    def to_dict(self) -> dict:
        return {
            "kind": "mlp",
            "input_dim": self.input_dim,
            "shapes": [list(w.shape) for w, _ in self.layers],
            "weights": [w.ravel().tolist() for w, _ in self.layers],
            "biases": [b.tolist() for _, b in self.layers],
            "config": {**asdict(self.config), "hidden_sizes": list(self.config.hidden_sizes)},
            "validation_pcc": self.validation_pcc,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        layers = []
        for shape, w, b in zip(d["shapes"], d["weights"], d["biases"]):
            layers.append((np.asarray(w, float).reshape(shape), np.asarray(b, float)))
        model = cls(layers, MlpConfig(**d["config"]), d.get("validation_pcc"))
        if model.input_dim != d["input_dim"]:
            raise DimensionError("input_dim does not match the first layer")
        return model

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "MlpModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def init_layers(input_dim: int, cfg: MlpConfig, rng: np.random.Generator) -> list[Layer]:
    layers = []
    sizes = [input_dim, *cfg.hidden_sizes, 1]
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        b = rng.uniform(-bound, bound, size=fan_out)
        layers.append((w, b))
    return layers


def forward(layers: list[Layer], X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Hidden activations (input first) and the output pre-activation."""
    acts = [X]
    a = X
    for w, b in layers[:-1]:
        a = sigmoid(a @ w.T + b)
        acts.append(a)
    w, b = layers[-1]
    return acts, (a @ w.T + b)[:, 0]


def bce_loss(layers: list[Layer], X: np.ndarray, y: np.ndarray) -> float:
    _, z = forward(layers, X)
    # log(1 + e^z) - y z, computed stably
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def loss_and_grads(layers: list[Layer], X: np.ndarray, y: np.ndarray) -> tuple[float, list[Layer]]:
    """Mean cross-entropy and its gradient w.r.t. every (weights, bias) pair."""
    acts, z = forward(layers, X)
    n = X.shape[0]
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    delta = ((sigmoid(z) - y) / n)[:, None]
    grads: list[Layer] = []
    for li in range(len(layers) - 1, -1, -1):
        w, _ = layers[li]
        a_in = acts[li]
        grads.append((delta.T @ a_in, delta.sum(axis=0)))
        if li > 0:
            delta = (delta @ w) * a_in * (1.0 - a_in)
    grads.reverse()
    return loss, grads


def _as_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionError("training data must be a non-empty 2-D array")
    if y.shape != (X.shape[0],):
        raise DimensionError(f"{X.shape[0]} vectors but {y.shape} labels")
    return X, y


def mlp_train(X, y, cfg: MlpConfig = MlpConfig()) -> MlpModel:
    """Fit on rows of ``X`` with 0/1 labels ``y`` (1 = attack)."""
    X, y = _as_xy(X, y)
    rng = np.random.default_rng(cfg.seed)
    layers = init_layers(X.shape[1], cfg, rng)
    n = X.shape[0]
    lr = cfg.learning_rate
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, grads = loss_and_grads(layers, X[idx], y[idx])
            for (w, b), (gw, gb) in zip(layers, grads):
                w -= lr * gw
                b -= lr * gb
        loss = bce_loss(layers, X, y)
        if not math.isfinite(loss):
            raise TrainingError("loss is not finite", epoch)
        history.append(loss)
    if not all(np.isfinite(w).all() and np.isfinite(b).all() for w, b in layers):
        raise TrainingError("non-finite weights after training", cfg.epochs)
    return MlpModel(layers, cfg, history=history)


def mlp_score(model: MlpModel, x) -> np.ndarray | float:
    """Attack score(s) in [0, 1] for one vector or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != model.input_dim:
        raise DimensionError(f"expected {model.input_dim} inputs, got {X.shape[1]}")
    _, z = forward(model.layers, X)
    s = sigmoid(z)
    return float(s[0]) if single else s


def mlp_decide(model: MlpModel, x, threshold: float = 0.5):
    """Attack iff score >= threshold. Returns a ClassLabel, or a 0/1 array for batches."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    s = mlp_score(model, x)
    if isinstance(s, float):
        return ClassLabel.ATTACK if s >= threshold else ClassLabel.NORMAL
    return (s >= threshold).astype(np.int8)
