"""Stateless forward primitives shared by the layer classes."""

import numpy as np
from scipy.special import expit

from .. import kernels

PROB_CLAMP = 1e-7


def sigmoid(x):
    # expit is overflow-free for any finite input
    return expit(x)


def relu(x):
    return np.maximum(x, 0)


def leaky_relu(x, alpha=0.01):
    return np.where(x > 0, x, alpha * x)


def same_padding(kernel):
    if kernel % 2 == 0:
        raise ValueError("same padding needs an odd kernel size")
    return (kernel - 1) // 2


def conv2d_forward(x, weights, bias=None, padding="same"):
    """Cross-correlation, stride 1.

    ``x`` is ``(N, C, H, W)`` (a single ``(C, H, W)`` image is accepted),
    ``weights`` is ``(F, C, kh, kw)``. ``padding`` is ``"same"``, ``"valid"``
    or an explicit zero-padding width.
    """
    single = x.ndim == 3
    if single:
        x = x[None]
    F, C, kh, kw = weights.shape
    if x.shape[1] != C:
        raise ValueError(f"input has {x.shape[1]} channels, kernel expects {C}")
    if padding == "same":
        if kh != kw:
            raise ValueError("same padding needs a square kernel")
        pad = same_padding(kh)
    elif padding == "valid":
        pad = 0
    else:
        pad = int(padding)
    N, _, H, W = x.shape
    oh, ow = H + 2 * pad - kh + 1, W + 2 * pad - kw + 1
    if oh < 1 or ow < 1:
        raise ValueError(f"kernel {kh}x{kw} does not fit a {H}x{W} input with padding {pad}")
    cols = kernels.im2col(x, kh, kw, pad)
    out = cols @ weights.reshape(F, -1).T
    if bias is not None:
        out += bias
    out = np.ascontiguousarray(out.reshape(N, oh, ow, F).transpose(0, 3, 1, 2))
    return out[0] if single else out


def maxpool_forward(x):
    """2x2 / stride 2 max pooling. Returns ``(out, argmax)``."""
    single = x.ndim == 3
    if single:
        x = x[None]
    if x.shape[2] < 2 or x.shape[3] < 2:
        raise ValueError("max pooling needs spatial dims >= 2")
    out, arg = kernels.maxpool2x2_forward(x)
    return (out[0], arg[0]) if single else (out, arg)


def dropout(x, rate, training, rng=None):
    """Inverted dropout. Returns ``(out, mask)``; ``mask`` is None in eval mode."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    mask = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * mask, mask


def bce_loss(p, y):
    """Mean binary cross-entropy and its gradient with respect to ``p``.

    ``p`` is clamped to ``[1e-7, 1 - 1e-7]``; outside that band the gradient
    is zero, as with any clip.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(p.shape)
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    n = p.size
    loss = -np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    grad = (-(y / pc) + (1.0 - y) / (1.0 - pc)) / n
    grad = np.where((p < PROB_CLAMP) | (p > 1.0 - PROB_CLAMP), 0.0, grad)
    return float(loss), grad


def lstm_forward(x, params, variant="standard", mask=None):
    """Final hidden state of a single-layer LSTM over ``x`` of shape ``(N, T, F)``.

    ``params`` holds ``Wx, Wh, b`` for the standard cell or ``Wix, Wih, Wgi,
    Wfi, Woi`` for the literal variant.
    """
    xt = np.ascontiguousarray(np.swapaxes(x, 0, 1))
    if mask is None:
        mask = np.ones(xt.shape[:2], dtype=xt.dtype)
    if variant == "standard":
        h, _, _ = kernels.lstm_standard_forward(xt, mask, params["Wx"], params["Wh"], params["b"])
    elif variant == "paper_literal":
        h, _, _ = kernels.lstm_literal_forward(
            xt, mask, params["Wix"], params["Wih"], params["Wgi"], params["Wfi"], params["Woi"]
        )
    else:
        raise ValueError(f"unknown LSTM variant {variant!r}")
    return h[-1]
