"""Layers with explicit forward/backward passes.

Every layer caches what its backward pass needs during ``forward`` and
writes parameter gradients into ``self.grads`` (overwriting, not
accumulating). ``build`` receives the per-sample input shape and returns the
per-sample output shape.
"""

import numpy as np

from .. import kernels
from . import functional as F


def glorot_uniform(rng, shape, fan_in, fan_out, dtype=np.float64):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    trainable = False

    def __init__(self):
        self.params = {}
        self.grads = {}

    def build(self, input_shape, rng, dtype=np.float64):
        return input_shape

    def forward(self, x, training=False, rng=None):
        raise NotImplementedError

    def backward(self, grad):
        raise NotImplementedError

    def config(self):
        return {}

    def describe(self):
        return {"type": type(self).__name__, **self.config()}

    def _zero_grads(self):
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.config().items())
        return f"{type(self).__name__}({args})"


class Dense(Layer):
    trainable = True

    def __init__(self, units, init="glorot"):
        super().__init__()
        if init not in ("glorot", "zeros"):
            raise ValueError(f"unknown init {init!r}")
        self.units = units
        self.init = init

    def build(self, input_shape, rng, dtype=np.float64):
        (n_in,) = input_shape
        self.params = {
            "W": glorot_uniform(rng, (n_in, self.units), n_in, self.units, dtype),
            "b": np.zeros(self.units, dtype=dtype),
        }
        if self.init == "zeros":
            self.params["W"][...] = 0
        self._zero_grads()
        return (self.units,)

    def forward(self, x, training=False, rng=None):
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, grad):
        self.grads["W"] = self._x.T @ grad
        self.grads["b"] = grad.sum(axis=0)
        return grad @ self.params["W"].T

    def config(self):
        return {"units": self.units, "init": self.init}


class Conv2D(Layer):
    """``filters`` kernels of ``kernel x kernel``, stride 1, zero padding."""

    trainable = True

    def __init__(self, filters, kernel=3, padding="same"):
        super().__init__()
        self.filters = filters
        self.kernel = kernel
        self.padding = padding

    @property
    def pad(self):
        return F.same_padding(self.kernel) if self.padding == "same" else 0

    def build(self, input_shape, rng, dtype=np.float64):
        c, h, w = input_shape
        k = self.kernel
        fan_in, fan_out = c * k * k, self.filters * k * k
        self.params = {
            "W": glorot_uniform(rng, (self.filters, c, k, k), fan_in, fan_out, dtype),
            "b": np.zeros(self.filters, dtype=dtype),
        }
        self._zero_grads()
        p = self.pad
        return (self.filters, h + 2 * p - k + 1, w + 2 * p - k + 1)

    def forward(self, x, training=False, rng=None):
        k, p = self.kernel, self.pad
        N, C, H, W = x.shape
        self._shape = x.shape
        self._cols = kernels.im2col(x, k, k, p)
        oh, ow = H + 2 * p - k + 1, W + 2 * p - k + 1
        out = self._cols @ self.params["W"].reshape(self.filters, -1).T + self.params["b"]
        return np.ascontiguousarray(out.reshape(N, oh, ow, self.filters).transpose(0, 3, 1, 2))

    def backward(self, grad):
        k, p = self.kernel, self.pad
        W = self.params["W"]
        g = grad.transpose(0, 2, 3, 1).reshape(-1, self.filters)
        self.grads["W"] = (g.T @ self._cols).reshape(W.shape)
        self.grads["b"] = g.sum(axis=0)
        dcols = g @ W.reshape(self.filters, -1)
        return kernels.col2im(dcols, self._shape, k, k, p)

    def config(self):
        return {"filters": self.filters, "kernel": self.kernel, "padding": self.padding}


class ReLU(Layer):
    def forward(self, x, training=False, rng=None):
        self._pos = x > 0
        return np.where(self._pos, x, 0).astype(x.dtype, copy=False)

    def backward(self, grad):
        return grad * self._pos


class LeakyReLU(Layer):
    def __init__(self, alpha=0.01):
        super().__init__()
        self.alpha = alpha

    def forward(self, x, training=False, rng=None):
        self._pos = x > 0
        return F.leaky_relu(x, self.alpha)

    def backward(self, grad):
        return np.where(self._pos, grad, self.alpha * grad)

    def config(self):
        return {"alpha": self.alpha}


class Sigmoid(Layer):
    def forward(self, x, training=False, rng=None):
        self._out = F.sigmoid(x)
        return self._out

    def backward(self, grad):
        return grad * self._out * (1.0 - self._out)


class MaxPool2D(Layer):
    """2x2 windows, stride 2; odd trailing rows/columns are dropped."""

    def build(self, input_shape, rng, dtype=np.float64):
        c, h, w = input_shape
        if h < 2 or w < 2:
            raise ValueError(f"cannot pool a {h}x{w} map")
        return (c, h // 2, w // 2)

    def forward(self, x, training=False, rng=None):
        self._hw = x.shape[2:]
        out, self._arg = kernels.maxpool2x2_forward(x)
        return out

    def backward(self, grad):
        return kernels.maxpool2x2_backward(grad, self._arg, *self._hw)


class Dropout(Layer):
    def __init__(self, rate):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, training=False, rng=None):
        out, self._mask = F.dropout(x, self.rate, training, rng)
        return out

    def backward(self, grad):
        return grad if self._mask is None else grad * self._mask

    def config(self):
        return {"rate": self.rate}


class Flatten(Layer):
    def build(self, input_shape, rng, dtype=np.float64):
        return (int(np.prod(input_shape)),)

    def forward(self, x, training=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)


class LSTM(Layer):
    """Single LSTM layer emitting only the hidden state of the last timestep.

    Input ``(N, T, features)``, output ``(N, hidden)``.

    ``variant="standard"`` is the usual four-gate cell (sigmoid gates, tanh
    candidate, ``h = o * tanh(c)``). ``variant="paper_literal"`` drives every
    gate from the input state ``i = sigma(x Wix + h Wih)`` with ``m = g*i + f*m``
    and ``h = o*m``, no biases and no output squashing.

    With ``masked=True`` leading all-zero timesteps (the padding prefix) leave
    the state untouched.
    """

    trainable = True

    def __init__(self, hidden=32, variant="standard", masked=False, forget_bias=1.0):
        super().__init__()
        if variant not in ("standard", "paper_literal"):
            raise ValueError(f"unknown LSTM variant {variant!r}")
        self.hidden = hidden
        self.variant = variant
        self.masked = masked
        self.forget_bias = forget_bias

    def build(self, input_shape, rng, dtype=np.float64):
        n_in = input_shape[-1]
        H = self.hidden
        if self.variant == "standard":
            b = np.zeros(4 * H, dtype=dtype)
            b[H:2 * H] = self.forget_bias
            self.params = {
                "Wx": glorot_uniform(rng, (n_in, 4 * H), n_in, 4 * H, dtype),
                "Wh": glorot_uniform(rng, (H, 4 * H), H, 4 * H, dtype),
                "b": b,
            }
        else:
            self.params = {
                "Wix": glorot_uniform(rng, (n_in, H), n_in, H, dtype),
                "Wih": glorot_uniform(rng, (H, H), H, H, dtype),
                "Wgi": glorot_uniform(rng, (H, H), H, H, dtype),
                "Wfi": glorot_uniform(rng, (H, H), H, H, dtype),
                "Woi": glorot_uniform(rng, (H, H), H, H, dtype),
            }
        self._zero_grads()
        return (H,)

    def _mask(self, xt):
        T, N, _ = xt.shape
        if not self.masked:
            return np.ones((T, N), dtype=xt.dtype)
        nonzero = np.any(xt != 0, axis=2)
        # only the leading zero rows are padding
        return np.maximum.accumulate(nonzero, axis=0).astype(xt.dtype)

    def forward(self, x, training=False, rng=None):
        xt = np.ascontiguousarray(np.swapaxes(x, 0, 1))
        mask = self._mask(xt)
        p = self.params
        if self.variant == "standard":
            cache = kernels.lstm_standard_forward(xt, mask, p["Wx"], p["Wh"], p["b"])
        else:
            cache = kernels.lstm_literal_forward(xt, mask, p["Wix"], p["Wih"], p["Wgi"], p["Wfi"], p["Woi"])
        self._cache = (xt, mask, cache)
        return cache[0][-1].copy()

    def backward(self, grad):
        xt, mask, cache = self._cache
        p = self.params
        grad = np.ascontiguousarray(grad, dtype=xt.dtype)
        if self.variant == "standard":
            dx, dWx, dWh, db = kernels.lstm_standard_backward(grad, xt, mask, p["Wx"], p["Wh"], *cache)
            self.grads = {"Wx": dWx, "Wh": dWh, "b": db}
        else:
            dx, *dws = kernels.lstm_literal_backward(
                grad, xt, mask, p["Wix"], p["Wih"], p["Wgi"], p["Wfi"], p["Woi"], *cache
            )
            self.grads = dict(zip(("Wix", "Wih", "Wgi", "Wfi", "Woi"), dws))
        return np.swapaxes(dx, 0, 1)

    def config(self):
        return {"hidden": self.hidden, "variant": self.variant, "masked": self.masked, "forget_bias": self.forget_bias}


LAYER_TYPES = {
    cls.__name__: cls
    for cls in (Dense, Conv2D, ReLU, LeakyReLU, Sigmoid, MaxPool2D, Dropout, Flatten, LSTM)
}


def layer_from_description(desc):
    desc = dict(desc)
    cls = LAYER_TYPES[desc.pop("type")]
    return cls(**desc)
