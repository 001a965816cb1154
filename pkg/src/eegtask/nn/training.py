"""Adam training loop for the raw-epoch network, with early stopping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateLabels
from ..seeding import derive_rng
from .network import Network, build_difficulty_net, calibrate_shift_scale, cross_entropy


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    validation_fraction: float = 0.2
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if self.batch_size < 1 or self.max_epochs < 0 or self.patience < 0:
            raise ValueError("batch_size, max_epochs and patience must be non-negative")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


class Adam:
    def __init__(self, params, cfg: TrainConfig):
        self.params = params
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.cfg = cfg
        self.t = 0

    def step(self, grads):
        cfg = self.cfg
        self.t += 1
        b1t = 1.0 - cfg.beta1 ** self.t
        b2t = 1.0 - cfg.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * (g * g)
            p -= (cfg.learning_rate * (m / b1t) / (np.sqrt(v / b2t) + cfg.adam_eps)).astype(p.dtype)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


@dataclass
class CnnModel:
    net: Network
    history: list = field(default_factory=list)
    best_val_accuracy: float = 0.0

    def predict(self, x: np.ndarray, batch_size: int = 128) -> np.ndarray:
        return evaluate_network(self.net, x, batch_size=batch_size)


def evaluate_network(net: Network, x: np.ndarray, batch_size: int = 128) -> np.ndarray:
    preds = []
    for s in range(0, len(x), batch_size):
        probs = net.forward(x[s:s + batch_size], train=False)
        preds.append(probs.argmax(axis=1))
    return np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)


def _loss_accuracy(net: Network, x, y, batch_size=128):
    losses = []
    correct = 0
    for s in range(0, len(x), batch_size):
        probs = net.forward(x[s:s + batch_size], train=False)
        losses.append(cross_entropy(probs, y[s:s + batch_size]) * len(probs))
        correct += int((probs.argmax(axis=1) == y[s:s + batch_size]).sum())
    return sum(losses) / len(x), correct / len(x)


def stratified_split(y: np.ndarray, holdout_fraction: float, rng: np.random.Generator):
    """Per-class split into (rest, holdout) index arrays, both in ascending order."""
    holdout = []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        n_hold = int(round(len(idx) * holdout_fraction))
        holdout.extend(rng.permutation(idx)[:n_hold].tolist())
    hold = np.array(sorted(holdout), dtype=np.int64)
    rest = np.setdiff1d(np.arange(len(y)), hold)
    return rest, hold


def fit_network(x_train: np.ndarray, y_train: np.ndarray,
                x_val: np.ndarray, y_val: np.ndarray,
                cfg: TrainConfig, net: Network | None = None) -> CnnModel:
    """Train on arrays [N, channels, samples]; returns the best-validation model.

    Deterministic given cfg.seed: parameter init, batch order and dropout
    masks all derive from it.
    """
    if len(np.unique(y_train)) < 2:
        raise DegenerateLabels("training set contains fewer than two classes")
    dtype = np.dtype(cfg.dtype)
    x_train = np.asarray(x_train, dtype=dtype)
    x_val = np.asarray(x_val, dtype=dtype)
    y_train = np.asarray(y_train, dtype=np.int64)
    y_val = np.asarray(y_val, dtype=np.int64)

    if net is None:
        net = build_difficulty_net(derive_rng(cfg.seed, "init"), dtype=dtype)
    shuffle_rng = derive_rng(cfg.seed, "shuffle")
    dropout_rng = derive_rng(cfg.seed, "dropout")

    first_order = shuffle_rng.permutation(len(y_train))
    calibrate_shift_scale(net, x_train[first_order[:cfg.batch_size]])

    optimizer = Adam(net.params(), cfg)
    history = []
    best_val = -1.0
    best_params = net.copy_params()
    since_best = 0

    for epoch in range(cfg.max_epochs):
        order = first_order if epoch == 0 else shuffle_rng.permutation(len(y_train))
        losses = []
        correct = 0
        for s in range(0, len(order), cfg.batch_size):
            batch = order[s:s + cfg.batch_size]
            probs = net.forward(x_train[batch], train=True, rng=dropout_rng)
            losses.append(cross_entropy(probs, y_train[batch]) * len(batch))
            correct += int((probs.argmax(axis=1) == y_train[batch]).sum())
            net.backward(y_train[batch])
            optimizer.step(net.grads())
        val_loss, val_acc = _loss_accuracy(net, x_val, y_val)
        history.append(EpochStats(
            epoch=epoch,
            train_loss=sum(losses) / len(order),
            train_accuracy=correct / len(order),
            val_loss=val_loss,
            val_accuracy=val_acc,
        ))
        if val_acc > best_val:
            best_val = val_acc
            best_params = net.copy_params()
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break

    net.set_params(best_params)
    return CnnModel(net=net, history=history, best_val_accuracy=max(best_val, 0.0))


def train_cnn(epochs, cfg: TrainConfig) -> CnnModel:
    """Train from a list of epochs; a stratified validation split is carved internally."""
    x = np.stack([ep.samples for ep in epochs])
    y = np.array([ep.difficulty for ep in epochs], dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("training set contains fewer than two classes")
    rest, hold = stratified_split(y, cfg.validation_fraction, derive_rng(cfg.seed, "val-split"))
    return fit_network(x[rest], y[rest], x[hold], y[hold], cfg)


def history_csv(history) -> str:
    lines = ["epoch,train_loss,train_accuracy,val_loss,val_accuracy"]
    for row in history:
        lines.append(
            f"{row.epoch},{row.train_loss:.6f},{row.train_accuracy:.6f},"
            f"{row.val_loss:.6f},{row.val_accuracy:.6f}"
        )
    return "\n".join(lines) + "\n"
