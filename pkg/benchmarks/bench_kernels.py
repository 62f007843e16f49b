"""Time each hot kernel under the numba and the pure-numpy backend.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from pdtrace import kernels
from pdtrace._backend import HAVE_NUMBA, use_backend


def _lstm_case(rng, T=900, B=8, F=5, H=32):
    x = rng.standard_normal((T, B, F))
    mask = np.ones((T, B))
    Wx = rng.standard_normal((F, 4 * H)) * 0.1
    Wh = rng.standard_normal((H, 4 * H)) * 0.1
    b = np.zeros(4 * H)
    dh = rng.standard_normal((B, H))

    def run():
        h, c, gates = kernels.lstm_standard_forward(x, mask, Wx, Wh, b)
        kernels.lstm_standard_backward(dh, x, mask, Wx, Wh, h, c, gates)

    return run


def _literal_case(rng, T=900, B=8, F=5, H=32):
    x = rng.standard_normal((T, B, F))
    mask = np.ones((T, B))
    Wix = rng.standard_normal((F, H)) * 0.1
    Wih, Wgi, Wfi, Woi = (rng.standard_normal((H, H)) * 0.1 for _ in range(4))
    dh = rng.standard_normal((B, H))

    def run():
        h, mem, acts = kernels.lstm_literal_forward(x, mask, Wix, Wih, Wgi, Wfi, Woi)
        kernels.lstm_literal_backward(dh, x, mask, Wix, Wih, Wgi, Wfi, Woi, h, mem, acts)

    return run


def _conv_case(rng, shape=(16, 32, 32, 32)):
    x = rng.standard_normal(shape)

    def run():
        cols = kernels.im2col(x, 3, 3, 1)
        kernels.col2im(cols, x.shape, 3, 3, 1)

    return run


def _pool_case(rng, shape=(16, 32, 32, 32)):
    x = rng.standard_normal(shape)

    def run():
        out, arg = kernels.maxpool2x2_forward(x)
        kernels.maxpool2x2_backward(out, arg, shape[2], shape[3])

    return run


def _draw_case(rng, n=20000, side=288):
    rows = rng.integers(0, side, n)
    cols = rng.integers(0, side, n)
    down = rng.random(n) > 0.05

    def run():
        kernels.draw_strokes(np.zeros((side, side), np.uint8), rows, cols, down)

    return run


CASES = {
    "lstm standard fwd+bwd": _lstm_case,
    "lstm literal fwd+bwd": _literal_case,
    "im2col+col2im": _conv_case,
    "maxpool fwd+bwd": _pool_case,
    "draw_strokes": _draw_case,
}


def best_of(fn, repeat):
    fn()  # warm-up, also triggers compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if not HAVE_NUMBA:
        print("numba not importable; timing the numpy path only")
    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, make in CASES.items():
        run = make(np.random.default_rng(0))
        row = {}
        for b in backends:
            with use_backend(b):
                row[b] = best_of(run, args.repeat)
        line = f"{name:<24}" + "".join(f"{row[b] * 1e3:>10.2f}ms" for b in backends)
        if "numba" in row:
            line += f"{row['numpy'] / row['numba']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
