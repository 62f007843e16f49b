"""SGD with momentum and inverse-time learning-rate decay."""

import numpy as np

from .network import NonFiniteError


class SGD:
    """``lr_t = lr0 / (1 + decay * t)``, ``v = momentum * v - lr_t * g``, ``w += v``.

    ``t`` counts completed updates (one per batch).
    """

    def __init__(self, lr0=0.003, decay=1e-6, momentum=0.9):
        if lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if decay < 0 or not 0 <= momentum < 1:
            raise ValueError("decay must be >= 0 and momentum in [0, 1)")
        self.lr0 = lr0
        self.decay = decay
        self.momentum = momentum
        self.iteration = 0
        self.velocity = {}

    def learning_rate(self, iteration=None):
        t = self.iteration if iteration is None else iteration
        return self.lr0 / (1.0 + self.decay * t)

    def step(self, network):
        for i, name, _ in network.parameters():
            g = network.layers[i].grads[name]
            if not np.all(np.isfinite(g)):
                bad = int(np.count_nonzero(~np.isfinite(g)))
                raise NonFiniteError(
                    f"non-finite gradient in layer {i} ({type(network.layers[i]).__name__}) "
                    f"parameter {name!r}: {bad} of {g.size} entries, iteration {self.iteration}"
                )
        lr = self.learning_rate()
        for i, name, w in network.parameters():
            g = network.layers[i].grads[name]
            v = self.velocity.get((i, name))
            if v is None:
                v = np.zeros_like(w)
            v = self.momentum * v - lr * g
            self.velocity[(i, name)] = v
            w += v
        self.iteration += 1
