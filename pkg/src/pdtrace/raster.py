"""Drawings as images: rasterise, resize, augment, normalise.

Images are square single-channel rasters. Before normalisation pixels are
``uint8`` strokes (255) on a black background (0); after normalisation they
are ``float64`` z-scores.
"""

import struct
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from ._rng import derive_seed

ORIGINAL = "original"
AUGMENTED = "augmented"


class RasterError(ValueError):
    pass


@dataclass(frozen=True)
class ImageSample:
    pixels: np.ndarray
    label: int
    provenance: str = ORIGINAL
    source_id: str = ""
    channels: int = 1

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] != px.shape[1]:
            raise RasterError(f"images must be square 2-D arrays, got shape {px.shape}")

    @property
    def side(self):
        return self.pixels.shape[0]


@dataclass(frozen=True)
class AugmentParams:
    rotation_max_deg: float = 15.0
    zoom_range: tuple = (0.9, 1.1)
    hflip_prob: float = 0.5
    control_multiplier: int = 23
    patient_multiplier: int = 11
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.zoom_range
        if not (0 < lo <= hi):
            raise RasterError(f"zoom_range must satisfy 0 < low <= high, got {self.zoom_range}")
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise RasterError("hflip_prob must lie in [0, 1]")
        if self.control_multiplier < 1 or self.patient_multiplier < 1:
            raise RasterError("augmentation multipliers must be >= 1")


@dataclass(frozen=True)
class NormStats:
    mean_image: np.ndarray
    std_image: np.ndarray
    epsilon: float = 1e-8
    n_images: int = 0


def render(traj, side=288):
    """Draw the pen-down strokes of a trajectory on a ``side`` x ``side`` canvas.

    ``x`` maps to columns and ``y`` to rows, each as ``round(v * (side - 1))``.
    Segments join consecutive records only when both touch the tablet.
    """
    if len(traj) == 0:
        raise RasterError("cannot render an empty trajectory")
    canvas = np.zeros((side, side), dtype=np.uint8)
    scale = side - 1
    cols = np.floor(traj.data[:, 1] * scale + 0.5).astype(np.int64)
    rows = np.floor(traj.data[:, 2] * scale + 0.5).astype(np.int64)
    np.clip(cols, 0, scale, out=cols)
    np.clip(rows, 0, scale, out=rows)
    kernels.draw_strokes(canvas, rows, cols, traj.pressure > 0)
    return ImageSample(canvas, traj.label, ORIGINAL, traj.subject_id)


def _resample_matrix(n_in, n_out):
    """Rows of linear-interpolation weights, widened when shrinking so every
    input pixel contributes (triangle filter with support ``n_in / n_out``)."""
    scale = n_in / n_out
    support = max(scale, 1.0)
    centres = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.arange(n_in)
    w = np.maximum(0.0, 1.0 - np.abs(src[None, :] - centres[:, None]) / support)
    return w / w.sum(axis=1, keepdims=True)


def _to_uint8(values):
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def resize(img, new_side):
    """Bilinear resize; values rounded and clamped to ``[0, 255]``."""
    if new_side < 1:
        raise RasterError("new_side must be >= 1")
    if new_side == img.side:
        return replace(img, pixels=img.pixels.copy())
    W = _resample_matrix(img.side, new_side)
    out = W @ img.pixels.astype(np.float64) @ W.T
    return replace(img, pixels=_to_uint8(out))


def _bilinear_sample(src, r, c):
    """Sample ``src`` at fractional coordinates; zero outside the canvas."""
    n = src.shape[0]
    r0 = np.floor(r).astype(np.int64)
    c0 = np.floor(c).astype(np.int64)
    fr = r - r0
    fc = c - c0
    padded = np.zeros((n + 2, n + 2), dtype=np.float64)
    padded[1:-1, 1:-1] = src
    # shift by one so indices -1 and n hit the zero border
    r0 = np.clip(r0 + 1, 0, n + 1)
    c0 = np.clip(c0 + 1, 0, n + 1)
    r1 = np.clip(r0 + 1, 0, n + 1)
    c1 = np.clip(c0 + 1, 0, n + 1)
    outside = (r < -1) | (r > n) | (c < -1) | (c > n)
    val = (
        padded[r0, c0] * (1 - fr) * (1 - fc)
        + padded[r0, c1] * (1 - fr) * fc
        + padded[r1, c0] * fr * (1 - fc)
        + padded[r1, c1] * fr * fc
    )
    val[outside] = 0.0
    return val


def augment_one(img, params, rng):
    """Random rotation about the centre, zoom and horizontal flip.

    Three draws are consumed from ``rng`` in a fixed order (angle, zoom,
    flip) whatever the parameters, so streams stay aligned.
    """
    angle = np.deg2rad(rng.uniform(-1.0, 1.0) * params.rotation_max_deg)
    lo, hi = params.zoom_range
    zoom = lo + (hi - lo) * rng.random()
    flip = rng.random() < params.hflip_prob

    n = img.side
    centre = (n - 1) / 2.0
    rr, cc = np.meshgrid(np.arange(n, dtype=np.float64), np.arange(n, dtype=np.float64), indexing="ij")
    if flip:
        cc = (n - 1) - cc
    dr = rr - centre
    dc = cc - centre
    cos, sin = np.cos(angle), np.sin(angle)
    # inverse map: un-rotate and un-zoom output coordinates into the source
    src_r = (cos * dr + sin * dc) / zoom + centre
    src_c = (-sin * dr + cos * dc) / zoom + centre
    out = _bilinear_sample(img.pixels.astype(np.float64), src_r, src_c)
    return replace(img, pixels=_to_uint8(out), provenance=AUGMENTED)


def balance_augment(dataset, params, include_originals=False, index_offset=0):
    """Class-dependent number of augmented copies per image.

    Controls (label 0) get ``control_multiplier`` copies and patients
    ``patient_multiplier``. Copy ``j`` of sample ``i`` uses its own PRNG seeded
    from ``(params.seed, index_offset + i, j)`` so the output does not depend on
    processing order.
    """
    dataset = list(dataset)
    if not dataset:
        raise RasterError("cannot augment an empty dataset")
    out = []
    for i, img in enumerate(dataset):
        if include_originals:
            out.append(img)
        copies = params.control_multiplier if img.label == 0 else params.patient_multiplier
        for j in range(copies):
            rng = np.random.Generator(np.random.PCG64(derive_seed(params.seed, index_offset + i, j)))
            out.append(augment_one(img, params, rng))
    return out


def compute_norm_stats(train_images, epsilon=1e-8):
    """Per-pixel mean and population standard deviation of the training images."""
    train_images = list(train_images)
    if len(train_images) < 2:
        raise RasterError("need at least two training images for normalisation statistics")
    sides = {im.side for im in train_images}
    if len(sides) != 1:
        raise RasterError(f"training images differ in size: {sorted(sides)}")
    stack = np.stack([im.pixels.astype(np.float64) for im in train_images])
    return NormStats(stack.mean(axis=0), stack.std(axis=0), epsilon, len(train_images))


def _check_size(img, stats):
    if img.pixels.shape != stats.mean_image.shape:
        raise RasterError(f"image shape {img.pixels.shape} does not match statistics {stats.mean_image.shape}")


def normalize(img, stats):
    _check_size(img, stats)
    scale = np.maximum(stats.std_image, stats.epsilon)
    return replace(img, pixels=(img.pixels.astype(np.float64) - stats.mean_image) / scale)


def denormalize(img, stats):
    _check_size(img, stats)
    return replace(img, pixels=img.pixels * np.maximum(stats.std_image, stats.epsilon) + stats.mean_image)


def to_tensor(images, dtype=np.float64, side=None):
    """Stack images into ``(N, 1, side, side)``.

    An empty list needs ``side`` and gives a ``(0, 1, side, side)`` array.
    """
    images = list(images)
    if not images:
        if side is None:
            raise RasterError("side is needed to stack an empty image list")
        return np.zeros((0, 1, side, side), dtype=dtype)
    return np.stack([np.asarray(im.pixels, dtype=dtype) for im in images])[:, None]


# -- file formats --------------------------------------------------------------


def write_pgm(path, img):
    px = np.asarray(img.pixels)
    if px.dtype != np.uint8:
        raise RasterError("PGM output expects uint8 pixels (pre-normalisation images)")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{px.shape[1]} {px.shape[0]}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(px).tobytes())


def read_pgm(path, label=0, source_id=""):
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode("ascii"))
    if tokens[0] != "P5" or tokens[3] != "255":
        raise RasterError(f"{path}: not an 8-bit binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    px = np.frombuffer(raw[pos + 1:pos + 1 + w * h], dtype=np.uint8).reshape(h, w).copy()
    return ImageSample(px, label, ORIGINAL, source_id)


def write_tensor(path, images):
    """Little-endian float32 tensor: ``uint32 side, uint32 count`` then pixels."""
    images = list(images)
    side = images[0].side if images else 0
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", side, len(images)))
        for im in images:
            fh.write(np.asarray(im.pixels, dtype="<f4").tobytes())


def read_tensor(path):
    with open(path, "rb") as fh:
        side, count = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != side * side * count:
        raise RasterError(f"{path}: expected {count} images of {side}x{side}, found {data.size} values")
    return data.reshape(count, side, side).astype(np.float64)
