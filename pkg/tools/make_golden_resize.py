"""Freeze the 288 -> 64 resize of the fixture drawing used by the raster tests.

Run once; the test compares against the stored file byte for byte.
"""

import os
import sys

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(HERE, "..", "tests"))

from pdtrace import raster  # noqa: E402
from test_raster import fixture_drawing  # noqa: E402


def main():
    img = raster.resize(raster.render(fixture_drawing(), 288), 64)
    out = os.path.join(HERE, "..", "tests", "data", "golden_resize_64.pgm")
    raster.write_pgm(out, img)
    print(out, int(np.count_nonzero(img.pixels)), "non-zero pixels")


if __name__ == "__main__":
    main()
