"""Two-layer perceptron regressor: logistic hidden layer, linear output.

    out = b2 + sum_h w2[h] * sigmoid(b1[h] + sum_k w1[h, k] * x[k])

Trained on mean squared error with mini-batch Adam.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit

__all__ = [
    "MlpModel",
    "TrainConfig",
    "Gradients",
    "TrainingDivergedError",
    "ModelFormatError",
    "init_model",
    "forward",
    "predict",
    "loss_and_gradients",
    "fit",
    "train",
    "grad_check",
    "simplify_equal_weights",
    "save_model",
    "load_model",
]

_FORMAT_TAG = "chaos-sensor-mlp 1"


class TrainingDivergedError(RuntimeError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass
class MlpModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float = 0.0
    hidden_activation: str = "logistic"
    output_activation: str = "identity"

    def __post_init__(self):
        self.w1 = np.array(self.w1, dtype=float, ndmin=2)
        self.b1 = np.array(self.b1, dtype=float).reshape(-1)
        self.w2 = np.array(self.w2, dtype=float).reshape(-1)
        self.b2 = float(self.b2)
        nh = self.w1.shape[0]
        if self.b1.shape != (nh,) or self.w2.shape != (nh,):
            raise ValueError(f"inconsistent shapes: w1 {self.w1.shape}, b1 {self.b1.shape}, "
                             f"w2 {self.w2.shape}")
        if self.hidden_activation != "logistic" or self.output_activation != "identity":
            raise ValueError("only logistic hidden / identity output units are supported")
        if not all(np.isfinite(a).all() for a in (self.w1, self.b1, self.w2)) or not np.isfinite(self.b2):
            raise ValueError("non-finite weights")

    @property
    def nl(self):
        return self.w1.shape[1]

    @property
    def nh(self):
        return self.w1.shape[0]

    def copy(self):
        return MlpModel(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2)

    def predict(self, X):
        return predict(self, X)


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    epochs: int = 300
    learning_rate: float = 1e-3
    batch_size: int = 200
    l2: float = 1e-4
    shuffle: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init_gain: float = 2.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")


class Gradients(NamedTuple):
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float


def init_model(nl, nh, seed=0, gain=2.0) -> MlpModel:
    """Weights ~ U(-sqrt(gain / (fan_in + fan_out)), +...), biases zero."""
    if nl < 1 or nh < 1:
        raise ValueError("nl and nh must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bound1 = np.sqrt(gain / (nl + nh))
    w1 = rng.uniform(-bound1, bound1, size=(nh, nl))
    bound2 = np.sqrt(gain / (nh + 1))
    w2 = rng.uniform(-bound2, bound2, size=nh)
    return MlpModel(w1, np.zeros(nh), w2, 0.0)


def predict(model: MlpModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.nl:
        raise ValueError(f"expected (n, {model.nl}) inputs, got {X.shape}")
    return expit(X @ model.w1.T + model.b1) @ model.w2 + model.b2


def forward(model: MlpModel, window) -> float:
    x = np.asarray(window, dtype=float)
    if x.shape != (model.nl,):
        raise ValueError(f"window length {x.size} != nl={model.nl}")
    return float(predict(model, x[None, :])[0])


def loss_and_gradients(model: MlpModel, X, y, l2=0.0):
    """MSE + ``l2 * (|w1|^2 + |w2|^2)`` and its exact gradient."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    h = expit(X @ model.w1.T + model.b1)
    err = h @ model.w2 + model.b2 - y
    loss = float(err @ err) / n + l2 * (float(np.sum(model.w1**2)) + float(model.w2 @ model.w2))
    g_out = (2.0 / n) * err
    g_pre = np.outer(g_out, model.w2) * h * (1.0 - h)
    return loss, Gradients(
        w1=g_pre.T @ X + 2.0 * l2 * model.w1,
        b1=g_pre.sum(axis=0),
        w2=h.T @ g_out + 2.0 * l2 * model.w2,
        b2=float(g_out.sum()),
    )


def _mse(model, X, y):
    err = predict(model, X) - y
    return float(err @ err) / len(y)


def fit(X, y, nh, cfg: TrainConfig | None = None):
    """Train from arrays; returns ``(model, per-epoch training MSE)``."""
    cfg = TrainConfig() if cfg is None else cfg
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or len(X) == 0 or len(X) != len(y):
        raise ValueError(f"bad training data shapes {X.shape}, {y.shape}")
    init_seq, shuffle_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    model = init_model(X.shape[1], nh, np.random.default_rng(init_seq), cfg.init_gain)
    rng = np.random.default_rng(shuffle_seq)

    params = [model.w1, model.b1, model.w2, np.array(model.b2)]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1t = b2t = 1.0
    n = len(y)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            _, grads = loss_and_gradients(model, X[batch], y[batch], cfg.l2)
            b1t *= cfg.beta1
            b2t *= cfg.beta2
            step = cfg.learning_rate * np.sqrt(1.0 - b2t) / (1.0 - b1t)
            for p, g, mi, vi in zip(params, grads, m, v):
                mi *= cfg.beta1
                mi += (1.0 - cfg.beta1) * g
                vi *= cfg.beta2
                vi += (1.0 - cfg.beta2) * np.square(g)
                p -= step * mi / (np.sqrt(vi) + cfg.eps * np.sqrt(1.0 - b2t))
            model.b2 = float(params[3])
        loss = _mse(model, X, y)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"non-finite training loss at epoch {epoch + 1}")
        history.append(loss)
    return model, history


def train(ds, nh, cfg: TrainConfig | None = None) -> MlpModel:
    """Fit a model with ``nh`` hidden units to a :class:`LabeledDataset`."""
    if len(ds) == 0:
        raise ValueError("cannot train on an empty dataset")
    return fit(ds.values, ds.targets, nh, cfg)[0]


def grad_check(model: MlpModel, X, y, step=3e-5, l2=0.0) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    The default step balances O(step**2) truncation against rounding of the
    loss, which dominates below about 1e-5.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise ValueError("empty batch")
    _, grads = loss_and_gradients(model, X, y, l2)
    probe = model.copy()
    params = [probe.w1, probe.b1, probe.w2]
    worst = 0.0
    for p, g in zip(params, grads[:3]):
        flat, gflat = p.reshape(-1), np.asarray(g).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_and_gradients(probe, X, y, l2)[0]
            flat[i] = orig - step
            down = loss_and_gradients(probe, X, y, l2)[0]
            flat[i] = orig
            worst = max(worst, _rel_err(gflat[i], (up - down) / (2 * step)))
    orig = probe.b2
    probe.b2 = orig + step
    up = loss_and_gradients(probe, X, y, l2)[0]
    probe.b2 = orig - step
    down = loss_and_gradients(probe, X, y, l2)[0]
    return max(worst, _rel_err(grads.b2, (up - down) / (2 * step)))


def _rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def simplify_equal_weights(model: MlpModel) -> MlpModel:
    """Replace every input weight of a single-hidden-unit model by their mean."""
    if model.nh != 1:
        raise ValueError(f"equal-weights simplification needs nh=1, got nh={model.nh}")
    w1 = np.full_like(model.w1, model.w1.mean())
    return MlpModel(w1, model.b1.copy(), model.w2.copy(), model.b2)


def _row(values):
    return " ".join(f"{v:.17g}" for v in values)


def save_model(model: MlpModel, path):
    lines = [
        _FORMAT_TAG,
        f"nl {model.nl}",
        f"nh {model.nh}",
        f"hidden_activation {model.hidden_activation}",
        f"output_activation {model.output_activation}",
        "w1",
        *(_row(row) for row in model.w1),
        "b1",
        _row(model.b1),
        "w2",
        _row(model.w2),
        "b2",
        f"{model.b2:.17g}",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> MlpModel:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        return _parse_model(lines)
    except (IndexError, ValueError, KeyError) as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc


def _parse_model(lines):
    if lines[0] != _FORMAT_TAG:
        raise ValueError(f"unknown format line {lines[0]!r}")
    header = dict(ln.split(None, 1) for ln in lines[1:5])
    nl, nh = int(header["nl"]), int(header["nh"])
    if nl < 1 or nh < 1:
        raise ValueError("dimensions must be positive")
    pos = 5

    def block(name, rows, width):
        nonlocal pos
        if lines[pos] != name:
            raise ValueError(f"expected section {name!r}, found {lines[pos]!r}")
        out = []
        for ln in lines[pos + 1:pos + 1 + rows]:
            vals = [float(t) for t in ln.split()]
            if len(vals) != width:
                raise ValueError(f"section {name!r}: row of {len(vals)} values, expected {width}")
            out.append(vals)
        if len(out) != rows:
            raise ValueError(f"section {name!r} truncated")
        pos += 1 + rows
        return np.array(out)

    w1 = block("w1", nh, nl)
    b1 = block("b1", 1, nh)[0]
    w2 = block("w2", 1, nh)[0]
    b2 = block("b2", 1, 1)[0, 0]
    if pos != len(lines):
        raise ValueError("trailing content")
    return MlpModel(w1, b1, w2, b2, header["hidden_activation"], header["output_activation"])
