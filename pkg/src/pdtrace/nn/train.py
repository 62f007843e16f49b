"""Mini-batch training loop and per-epoch history."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .._rng import derive_seed, fisher_yates
from .functional import bce_loss
from .network import NonFiniteError
from .optim import SGD

HISTORY_COLUMNS = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 8
    epochs: int = 125
    lr0: float = 0.003
    decay: float = 1e-6
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class History:
    rows: list = field(default_factory=list)

    def append(self, epoch, train_loss, train_acc, val_loss, val_acc):
        self.rows.append((epoch, train_loss, train_acc, val_loss, val_acc))

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        k = HISTORY_COLUMNS.index(name)
        return np.array([r[k] for r in self.rows], dtype=np.float64)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HISTORY_COLUMNS)
            for r in self.rows:
                w.writerow([r[0]] + [repr(float(v)) for v in r[1:]])

    @classmethod
    def read_csv(cls, path):
        h = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != HISTORY_COLUMNS:
                raise ValueError(f"{path}: unexpected history header {header}")
            for r in reader:
                h.append(int(r[0]), *(float(v) for v in r[1:]))
        return h


def evaluate(network, x, y, batch_size=64):
    """Mean BCE loss and accuracy in eval mode; NaN for an empty set."""
    if len(x) == 0:
        return float("nan"), float("nan")
    p = network.predict(x, batch_size)
    loss, _ = bce_loss(p, y)
    acc = float(np.mean((p >= 0.5).astype(np.int64) == np.asarray(y)))
    return loss, acc


def train(network, x_train, y_train, x_val=None, y_val=None, config=TrainConfig(), callback=None):
    """Train ``network`` in place and return its :class:`History`.

    Each epoch visits the training set in a seeded shuffled order, one
    optimiser update per batch; a trailing short batch is used as is.
    """
    x_train = np.asarray(x_train)
    y_train = np.asarray(y_train, dtype=np.float64)
    n = len(x_train)
    if n == 0:
        raise ValueError("training set is empty")
    if len(y_train) != n:
        raise ValueError("x_train and y_train differ in length")
    has_val = x_val is not None and len(x_val) > 0
    opt = SGD(config.lr0, config.decay, config.momentum)
    history = History()
    drop_rng = np.random.default_rng(derive_seed(config.seed, 1))
    for epoch in range(1, config.epochs + 1):
        order = np.asarray(fisher_yates(n, derive_seed(config.seed, 0, epoch)))
        losses = []
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            p = network.forward(xb, training=True, rng=drop_rng)
            loss, grad = bce_loss(p, yb)
            if not np.isfinite(loss):
                raise NonFiniteError(f"non-finite loss at epoch {epoch}, update {opt.iteration}")
            network.backward(grad)
            opt.step(network)
            losses.append(loss * len(idx))
            correct += int(np.sum((p >= 0.5) == (yb == 1)))
        train_loss = float(np.sum(losses) / n)
        train_acc = correct / n
        if has_val:
            val_loss, val_acc = evaluate(network, x_val, y_val)
        else:
            val_loss = val_acc = float("nan")
        history.append(epoch, train_loss, train_acc, val_loss, val_acc)
        if callback is not None:
            callback(epoch, history)
    return history
