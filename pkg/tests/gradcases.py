"""Randomised network cases and the finite-difference comparison shared by
the gradient tests."""

import numpy as np

from pdtrace.nn import LSTM, Conv2D, Dense, Flatten, LeakyReLU, MaxPool2D, Network, ReLU, Sigmoid, bce_loss
from pdtrace.nn.gradcheck import numeric_gradient, relative_error
from pdtrace.nn.network import _cnn

GRAD_TOL = 1e-4
ABS_TOL = 1e-9
N_SHAPES = 20


def grad_errors(net, x, y, check_input=True, dropout_seed=None):
    """Per-array max relative error between analytic and central-difference
    gradients, and the overall max absolute error.

    With ``dropout_seed`` the net runs in training mode with a dropout mask
    that is redrawn identically on every evaluation.
    """
    x = np.array(x, dtype=np.float64)

    def fwd():
        if dropout_seed is None:
            return net.forward(x)
        return net.forward(x, training=True, rng=np.random.default_rng(dropout_seed))

    def loss():
        return bce_loss(fwd(), y)[0]

    _, g = bce_loss(fwd(), y)
    dx = net.backward(g)
    analytic = {(i, n): net.layers[i].grads[n].copy() for i, n, _ in net.parameters()}
    errs = {}
    pairs = [(f"{i}.{n}", analytic[(i, n)], numeric_gradient(loss, w)) for i, n, w in net.parameters()]
    if check_input:
        pairs.append(("input", dx, numeric_gradient(loss, x)))
    worst_abs = 0.0
    for key, a, num in pairs:
        errs[key] = float(relative_error(a, num).max())
        worst_abs = max(worst_abs, float(np.abs(a - num).max()))
    return errs, worst_abs


def labels(rng, n):
    return rng.integers(0, 2, n).astype(float)


def head():
    # a glorot head, so gradients reach every earlier layer
    return [Dense(1), Sigmoid()]


def _dense_case(rng):
    n_in, units, batch = rng.integers(1, 7, 3)
    net = Network([Dense(int(units)), *head()], (int(n_in),), seed=int(rng.integers(1 << 30)))
    return net, rng.standard_normal((batch, n_in)), True


def _conv_case(rng):
    c, f = rng.integers(1, 4, 2)
    h, w = rng.integers(3, 8, 2)
    k = int(rng.choice([1, 3] if min(h, w) < 5 else [1, 3, 5]))
    padding = str(rng.choice(["same", "valid"]))
    layers = [Conv2D(int(f), kernel=k, padding=padding), Flatten(), *head()]
    net = Network(layers, (int(c), int(h), int(w)), seed=int(rng.integers(1 << 30)))
    return net, rng.standard_normal((int(rng.integers(1, 4)), c, h, w)), True


def _activation_case(layer_factory):
    def make(rng):
        n_in, units, batch = rng.integers(1, 7, 3)
        layers = [Dense(int(units)), layer_factory(rng), *head()]
        net = Network(layers, (int(n_in),), seed=int(rng.integers(1 << 30)))
        return net, rng.standard_normal((batch, n_in)), True

    return make


def _pool_case(rng):
    c = int(rng.integers(1, 4))
    h, w = (int(v) for v in rng.integers(2, 8, 2))
    batch = int(rng.integers(1, 4))
    net = Network([MaxPool2D(), Flatten(), *head()], (c, h, w), seed=int(rng.integers(1 << 30)))
    # distinct, well separated values keep every argmax stable under the probe step
    x = rng.permutation(batch * c * h * w).reshape(batch, c, h, w) * 0.01
    return net, x, True


def _flatten_case(rng):
    shape = tuple(int(v) for v in rng.integers(1, 5, 3))
    net = Network([Flatten(), *head()], shape, seed=int(rng.integers(1 << 30)))
    return net, rng.standard_normal((int(rng.integers(1, 4)), *shape)), True


def _lstm_case(variant):
    def make(rng):
        hidden, feats, batch = (int(v) for v in rng.integers(1, 5, 3))
        T = int(rng.integers(1, 9))
        masked = bool(rng.random() < 0.5)
        net = Network([LSTM(hidden, variant=variant, masked=masked), *head()], (None, feats),
                      seed=int(rng.integers(1 << 30)))
        x = rng.standard_normal((batch, T, feats))
        if masked:
            x[0, : int(rng.integers(0, T))] = 0.0
        # the mask is a step function of the input, so only weights are probed
        return net, x, not masked

    return make


CASES = {
    "dense": _dense_case,
    "conv2d": _conv_case,
    "relu": _activation_case(lambda rng: ReLU()),
    "leaky_relu": _activation_case(lambda rng: LeakyReLU(float(rng.uniform(0.01, 0.5)))),
    "sigmoid": _activation_case(lambda rng: Sigmoid()),
    "maxpool": _pool_case,
    "flatten": _flatten_case,
    "lstm_standard": _lstm_case("standard"),
    "lstm_paper_literal": _lstm_case("paper_literal"),
}


def full_cnn_case(seed):
    """The production conv stack at 8x8 with narrow widths and a random head."""
    rng = np.random.default_rng(seed)
    net = _cnn(8, 0.2, 0.5, seed, np.float64, widths=(2, 3, 4), dense=(5, 4))
    # replace the zero head with random weights so the check is not vacuous
    net.layers[-2].params["W"][...] = rng.standard_normal(net.layers[-2].params["W"].shape)
    return net, rng.standard_normal((2, 1, 8, 8)), np.array([1.0, 0.0])
