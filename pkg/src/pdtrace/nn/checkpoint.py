"""Portable binary checkpoints.

Byte layout (all integers little-endian ``uint32``)::

    8 bytes   magic  b"PDTRCKPT"
    4 bytes   format version (currently 1)
    4 bytes   length L of the architecture descriptor
    L bytes   UTF-8 JSON architecture descriptor
    4 bytes   number of parameter blobs B
    B times:
        4 bytes   length of blob name, then the UTF-8 name ("<layer>.<param>")
        4 bytes   ndim, then ndim x 4 bytes of dimensions
        prod(dims) x 8 bytes of float64 little-endian values, row-major
"""

import json
import struct

import numpy as np

from .network import Network

MAGIC = b"PDTRCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _u32(n):
    return struct.pack("<I", n)


def save(network, path):
    desc = json.dumps(network.describe(), sort_keys=True).encode("utf-8")
    blobs = list(network.parameters())
    with open(path, "wb") as fh:
        fh.write(MAGIC + _u32(VERSION) + _u32(len(desc)) + desc + _u32(len(blobs)))
        for i, name, arr in blobs:
            key = f"{i}.{name}".encode("utf-8")
            fh.write(_u32(len(key)) + key + _u32(arr.ndim))
            fh.write(b"".join(_u32(d) for d in arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


class _Reader:
    def __init__(self, raw, path):
        self.raw = raw
        self.pos = 0
        self.path = path

    def take(self, n):
        if self.pos + n > len(self.raw):
            raise CheckpointError(f"{self.path}: truncated checkpoint")
        out = self.raw[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]


def load(path):
    """Rebuild the network described in the checkpoint and restore its weights."""
    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    if r.take(8) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    desc = json.loads(r.take(r.u32()).decode("utf-8"))
    net = Network.from_description(desc)
    expected = {f"{i}.{name}": arr for i, name, arr in net.parameters()}
    n_blobs = r.u32()
    if n_blobs != len(expected):
        raise CheckpointError(f"{path}: {n_blobs} blobs, architecture needs {len(expected)}")
    for _ in range(n_blobs):
        key = r.take(r.u32()).decode("utf-8")
        shape = tuple(r.u32() for _ in range(r.u32()))
        count = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(shape)
        target = expected.get(key)
        if target is None or target.shape != shape:
            raise CheckpointError(f"{path}: unexpected blob {key} with shape {shape}")
        target[...] = values
    if r.pos != len(r.raw):
        raise CheckpointError(f"{path}: trailing bytes after last blob")
    return net
