"""Sequential networks and the two reference architectures."""

import os

import numpy as np

from .layers import (
    LSTM,
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    MaxPool2D,
    ReLU,
    Sigmoid,
    layer_from_description,
)

CNN_SIDES = (32, 64, 128)


class NonFiniteError(FloatingPointError):
    """A NaN or Inf appeared in an activation, loss or gradient."""


def _debug_enabled():
    return os.environ.get("PDTRACE_DEBUG", "").strip().lower() not in ("", "0", "false", "no")


class Network:
    """An ordered stack of layers ending in a single sigmoid probability.

    ``input_shape`` is the per-sample shape, ``(C, H, W)`` for images or
    ``(T, features)`` for sequences (``T`` may be None).
    """

    def __init__(self, layers, input_shape, seed=0, dtype=np.float64):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.dtype = np.dtype(dtype)
        self.seed = seed
        self.debug = _debug_enabled()
        rng = np.random.default_rng(seed)
        shape = self.input_shape
        self.shapes = [shape]
        for layer in self.layers:
            try:
                shape = tuple(layer.build(shape, rng, self.dtype))
            except ValueError as exc:
                raise ValueError(f"{layer!r} cannot take input of shape {shape}: {exc}") from None
            self.shapes.append(shape)
        if shape != (1,):
            raise ValueError(f"network must end in a single output, got shape {shape}")

    # -- inspection ------------------------------------------------------------

    def census(self):
        counts = {}
        for layer in self.layers:
            name = type(layer).__name__
            counts[name] = counts.get(name, 0) + 1
        return counts

    def parameters(self):
        """``(layer_index, name, array)`` for every trainable array, in a fixed order."""
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params):
                yield i, name, layer.params[name]

    def n_parameters(self):
        return sum(p.size for _, _, p in self.parameters())

    def describe(self):
        return {
            "input_shape": [s for s in self.input_shape],
            "dtype": self.dtype.name,
            "layers": [layer.describe() for layer in self.layers],
        }

    @classmethod
    def from_description(cls, desc, seed=0):
        layers = [layer_from_description(d) for d in desc["layers"]]
        shape = tuple(desc["input_shape"])
        return cls(layers, shape, seed=seed, dtype=desc.get("dtype", "float64"))

    # -- computation -----------------------------------------------------------

    def _check_input(self, x):
        expected = self.input_shape
        got = x.shape[1:]
        ok = len(got) == len(expected) and all(e is None or e == g for e, g in zip(expected, got))
        if not ok:
            raise ValueError(f"expected per-sample input shape {expected}, got {got}")

    def _check_finite(self, arr, where):
        if self.debug and not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"non-finite values after {where}")

    def forward(self, x, training=False, rng=None):
        x = np.asarray(x, dtype=self.dtype)
        self._check_input(x)
        for layer in self.layers:
            x = layer.forward(x, training=training, rng=rng)
            self._check_finite(x, repr(layer))
        return x[:, 0]

    def backward(self, grad):
        """Backpropagate ``dL/dp`` of shape ``(N,)``; fills every layer's ``grads``."""
        g = np.asarray(grad, dtype=self.dtype).reshape(-1, 1)
        for layer in reversed(self.layers):
            g = layer.backward(g)
            self._check_finite(g, f"backward of {layer!r}")
        return g

    def predict(self, x, batch_size=64):
        """Probabilities in eval mode (dropout off)."""
        x = np.asarray(x, dtype=self.dtype)
        if len(x) == 0:
            return np.zeros(0)
        parts = [self.forward(x[i:i + batch_size]) for i in range(0, len(x), batch_size)]
        return np.concatenate(parts).astype(np.float64)

    def classify(self, x, batch_size=64):
        return (self.predict(x, batch_size) >= 0.5).astype(np.int64)


def build_cnn(input_side=32, conv_dropout=0.2, dense_dropout=0.5, seed=0, dtype=np.float64):
    """Three conv blocks (32, 64, 128 filters) and a 1024-512-1 dense head."""
    if input_side not in CNN_SIDES:
        raise ValueError(f"input_side must be one of {CNN_SIDES}, got {input_side}")
    return _cnn(input_side, conv_dropout, dense_dropout, seed, dtype)


def _cnn(input_side, conv_dropout, dense_dropout, seed, dtype, widths=(32, 64, 128), dense=(1024, 512)):
    layers = []
    for f in widths:
        layers += [Conv2D(f), ReLU(), Dropout(conv_dropout), Conv2D(f), ReLU(), MaxPool2D()]
    layers += [Flatten(), Dropout(dense_dropout)]
    for units in dense:
        layers += [Dense(units), ReLU(), Dropout(dense_dropout)]
    # a zero head makes an untrained network answer exactly 0.5
    layers += [Dense(1, init="zeros"), Sigmoid()]
    return Network(layers, (1, input_side, input_side), seed=seed, dtype=dtype)


def build_rnn(n_features=5, hidden=32, variant="standard", masked=False, seed=0, dtype=np.float64):
    """One LSTM layer whose last hidden state feeds a sigmoid dense unit."""
    layers = [LSTM(hidden, variant=variant, masked=masked), Dense(1, init="zeros"), Sigmoid()]
    return Network(layers, (None, n_features), seed=seed, dtype=dtype)
