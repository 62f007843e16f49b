"""Platform-stable seeded shuffling.

``numpy.random.Generator`` methods are allowed to change their output between
numpy releases; the raw PCG64 bit stream is not. Everything that must be
reproducible across machines (partitions, fold assignment) goes through
:func:`fisher_yates`, which only consumes ``PCG64.random_raw``.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(seed, *keys):
    """Mix integer keys into a 64-bit child seed (SplitMix64 finaliser)."""
    z = int(seed) & _MASK64
    for k in keys:
        z = (z + 0x9E3779B97F4A7C15 + (int(k) & _MASK64)) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
    return z


class RawStream:
    """Unbiased bounded integers from the raw PCG64 stream."""

    def __init__(self, seed):
        self._bg = np.random.PCG64(int(seed) & _MASK64)

    def next64(self):
        return int(self._bg.random_raw())

    def below(self, bound):
        """Uniform integer in ``[0, bound)`` by rejection (no modulo bias)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next64()
            if r < limit:
                return r % bound


def fisher_yates(n, seed):
    """Seeded permutation of ``range(n)``.

    Durstenfeld's variant: for ``i = n-1 .. 1`` swap ``i`` with a uniform
    ``j`` in ``[0, i]``.
    """
    perm = list(range(n))
    stream = RawStream(seed)
    for i in range(n - 1, 0, -1):
        j = stream.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm
