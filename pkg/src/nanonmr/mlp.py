"""Small fully connected classifier written directly on numpy.

Architecture: input -> 20 ReLU -> 35 ReLU -> 1 sigmoid, trained on the mean
squared error between sigmoid output and 0/1 label. Weights are stored as
``(fan_in, fan_out)`` matrices so a batch ``X`` propagates as ``X @ W + b``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.linear_model import LogisticRegression

HIDDEN = (20, 35)


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training loss became non-finite at epoch {epoch}")


def sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class MLPModel:
    layer_sizes: list
    weights: list
    biases: list
    recode_pm1: bool = False

    def __post_init__(self):
        self.layer_sizes = [int(s) for s in self.layer_sizes]
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("need one weight matrix and bias vector per layer transition")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != shape or b.shape != (shape[1],):
                raise ValueError(f"layer {i}: expected W{shape}, b({shape[1]},), got {w.shape}, {b.shape}")

    @property
    def n_input(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "MLPModel":
        return MLPModel(list(self.layer_sizes), [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.recode_pm1)

    def prepare(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_input:
            raise ValueError(f"input length {X.shape[1]} != n_input {self.n_input}")
        return 2.0 * X - 1.0 if self.recode_pm1 else X


def init(n_input: int, seed: int, hidden: Sequence[int] = HIDDEN, recode_pm1: bool = False) -> MLPModel:
    """Weights ~ Normal(0, 1/fan_in), biases zero."""
    if n_input < 1:
        raise ValueError("n_input must be >= 1")
    sizes = [int(n_input), *hidden, 1]
    rng = np.random.default_rng(seed)
    weights = [rng.standard_normal((a, b)) / math.sqrt(a) for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(b) for b in sizes[1:]]
    return MLPModel(sizes, weights, biases, recode_pm1)


def zeros_like(model: MLPModel) -> MLPModel:
    return MLPModel(
        list(model.layer_sizes),
        [np.zeros_like(w) for w in model.weights],
        [np.zeros_like(b) for b in model.biases],
        model.recode_pm1,
    )


def _forward_cache(model: MLPModel, A: np.ndarray):
    acts, pre = [A], []
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = A @ w + b
        pre.append(z)
        A = sigmoid(z) if i == last else np.maximum(z, 0.0)
        acts.append(A)
    return acts, pre


def forward(model: MLPModel, X) -> np.ndarray:
    """Sigmoid score in (0, 1) per row of X (a single record gives a length-1 array)."""
    acts, _ = _forward_cache(model, model.prepare(X))
    return acts[-1][:, 0]


def loss(scores, labels) -> float:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if s.size == 0:
        raise ValueError("empty input")
    return float(np.mean((s - y) ** 2))


def gradients(model: MLPModel, X, y) -> tuple[list, list, float]:
    """Exact gradients of the batch-mean MSE; returns ``(dW, db, loss)``.

    The ReLU derivative at exactly zero is taken as zero.
    """
    A0 = model.prepare(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = A0.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    acts, pre = _forward_cache(model, A0)
    s = acts[-1][:, 0]
    value = float(np.mean((s - y) ** 2))
    delta = (2.0 / n) * (s - y) * s * (1.0 - s)
    delta = delta[:, None]
    dW = [None] * len(model.weights)
    db = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        dW[i] = acts[i].T @ delta
        db[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (pre[i - 1] > 0.0)
    return dW, db, value


def classify(model: MLPModel, X) -> dict:
    """Threshold the score at 0.5; an exact 0.5 maps to label 1."""
    s = forward(model, X)
    labels = np.where(s >= 0.5, 1, 0)
    return {"label": labels, "score": s}


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 200
    early_stop_patience: int = 20
    init_seed: int = 0
    order_seed: int = 1
    optimizer: str = "adam"  # or "momentum"
    momentum: float = 0.9
    validation_fraction: float = 0.1
    recode_pm1: bool = False
    hidden: tuple = HIDDEN

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.max_epochs < 1 or self.early_stop_patience < 1:
            raise ValueError("learning rate, batch size, epochs and patience must be positive")
        if not 0.0 < self.validation_fraction <= 0.5:
            raise ValueError("validation_fraction must lie in (0, 0.5]")
        if self.optimizer not in ("adam", "momentum"):
            raise ValueError("optimizer must be 'adam' or 'momentum'")
        self.hidden = tuple(int(h) for h in self.hidden)


class _Adam:
    def __init__(self, model: MLPModel, lr: float, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.params = [*model.weights, *model.biases]
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _Momentum:
    def __init__(self, model: MLPModel, lr: float, mu: float):
        self.lr, self.mu = lr, mu
        self.params = [*model.weights, *model.biases]
        self.vel = [np.zeros_like(p) for p in self.params]

    def step(self, grads):
        for p, g, v in zip(self.params, grads, self.vel):
            v *= self.mu
            v -= self.lr * g
            p += v


@dataclass
class TrainResult:
    model: MLPModel
    history: list = field(default_factory=list)
    best_epoch: int = 0


def _validation_split(labels: np.ndarray, fraction: float, rng: np.random.Generator):
    val = []
    for c in (0, 1):
        idx = rng.permutation(np.flatnonzero(labels == c))
        k = max(1, int(round(fraction * len(idx)))) if len(idx) > 1 else 0
        val.append(idx[:k])
    val = np.sort(np.concatenate(val))
    mask = np.ones(labels.shape[0], bool)
    mask[val] = False
    return np.flatnonzero(mask), val


def train(X, y, cfg: TrainConfig = TrainConfig(), log=None) -> TrainResult:
    """Mini-batch MSE training with early stopping on a held-out validation slice.

    Returns the parameters from the epoch with the lowest validation loss.
    """
    X = np.asarray(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if not (np.any(y == 0) and np.any(y == 1)):
        raise ValueError("training data must contain both classes")
    model = init(X.shape[1], cfg.init_seed, cfg.hidden, cfg.recode_pm1)
    rng = np.random.default_rng(cfg.order_seed)
    tr, va = _validation_split(y.astype(int), cfg.validation_fraction, rng)
    Xv, yv = X[va], y[va]
    opt = _Adam(model, cfg.learning_rate) if cfg.optimizer == "adam" else _Momentum(model, cfg.learning_rate, cfg.momentum)

    best = model.copy()
    best_val = loss(forward(model, Xv), yv) if va.size else math.inf
    best_epoch, stale, history = 0, 0, []
    for epoch in range(1, cfg.max_epochs + 1):
        order = tr[rng.permutation(tr.size)]
        total = 0.0
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            dW, db, value = gradients(model, X[idx], y[idx])
            if not math.isfinite(value):
                raise TrainingDiverged(epoch)
            opt.step([*dW, *db])
            total += value * idx.size
        train_loss = total / order.size
        val_loss = loss(forward(model, Xv), yv) if va.size else train_loss
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise TrainingDiverged(epoch)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if log is not None:
            log(f"epoch {epoch}: train {train_loss:.5f} val {val_loss:.5f}")
        if val_loss < best_val:
            best_val, best, best_epoch, stale = val_loss, model.copy(), epoch, 0
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                break
    return TrainResult(best, history, best_epoch)


def save_checkpoint(model: MLPModel, path, cfg: Optional[TrainConfig] = None, extra: Optional[dict] = None) -> None:
    doc = {
        "layer_sizes": model.layer_sizes,
        "weights": [w.ravel(order="C").tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "recode_pm1": model.recode_pm1,
        "train_config": asdict(cfg) if cfg is not None else None,
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> MLPModel:
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    sizes = doc["layer_sizes"]
    weights = [np.asarray(w, dtype=float).reshape(a, b) for w, a, b in zip(doc["weights"], sizes[:-1], sizes[1:])]
    biases = [np.asarray(b, dtype=float) for b in doc["biases"]]
    return MLPModel(sizes, weights, biases, bool(doc.get("recode_pm1", False)))


@dataclass
class LinearBaseline:
    """Logistic regression on raw bits (no interaction terms)."""

    weights: np.ndarray
    bias: float

    def scores(self, X) -> np.ndarray:
        return sigmoid(np.asarray(X, dtype=float) @ self.weights + self.bias)

    def predict(self, X) -> np.ndarray:
        return np.where(self.scores(X) >= 0.5, 1, 0)


def train_linear_baseline(X, y, C: float = 1.0) -> LinearBaseline:
    clf = LogisticRegression(C=C, max_iter=2000)
    clf.fit(np.asarray(X, dtype=float), np.asarray(y, dtype=int))
    return LinearBaseline(clf.coef_[0].copy(), float(clf.intercept_[0]))


def classify_linear(model: LinearBaseline, X) -> np.ndarray:
    return model.predict(X)
