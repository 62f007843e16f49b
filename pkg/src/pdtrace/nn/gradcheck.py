"""Central finite-difference checks for the analytic gradients."""

import numpy as np

from .functional import bce_loss

# Entries smaller than this sit inside the roundoff band of a 1e-5 central
# difference in double precision (about 1e-11 absolute), so the relative
# error is measured against this magnitude instead.
FLOOR = 1e-7


def relative_error(a, b, floor=FLOOR):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), floor)


def numeric_gradient(f, arr, step=1e-5):
    """Gradient of scalar ``f()`` with respect to ``arr``, perturbed in place."""
    grad = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + step
        up = f()
        flat[k] = old - step
        down = f()
        flat[k] = old
        gflat[k] = (up - down) / (2 * step)
    return grad


def check_network(network, x, y, step=1e-5, check_input=True):
    """Max relative error per parameter (and the input) for the BCE loss.

    The network is run in eval mode so dropout is the identity.
    """
    x = np.array(x, dtype=np.float64)

    def loss():
        return bce_loss(network.forward(x), y)[0]

    _, grad = bce_loss(network.forward(x), y)
    dx = network.backward(grad)
    analytic = {(i, n): network.layers[i].grads[n].copy() for i, n, _ in network.parameters()}
    report = {}
    for i, name, w in network.parameters():
        num = numeric_gradient(loss, w, step)
        report[f"{i}.{name}"] = float(relative_error(analytic[(i, name)], num).max())
    if check_input:
        report["input"] = float(relative_error(dx, numeric_gradient(loss, x, step)).max())
    return report
