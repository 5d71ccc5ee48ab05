"""Flat binary checkpoints.

Layout (little-endian)::

    magic  b"FSWP"          4 bytes
    version                 uint32 (currently 1)
    count                   uint32
    per parameter:
        name_len            uint32, then UTF-8 name
        ndim                uint32, then ndim x uint64 extents
        values              prod(extents) x float64, row-major
"""

import struct

import numpy as np

from ..exceptions import ConfigurationError

MAGIC = b"FSWP"
VERSION = 1


def dump_parameters(named, fh):
    items = list(named.items())
    fh.write(MAGIC)
    fh.write(struct.pack("<II", VERSION, len(items)))
    for name, arr in items:
        arr = np.asarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(struct.pack("<I", arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.tobytes())


def load_parameters(fh):
    if fh.read(4) != MAGIC:
        raise ConfigurationError("not a parameter checkpoint")
    version, count = struct.unpack("<II", fh.read(8))
    if version != VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {version}")
    out = {}
    for _ in range(count):
        (n,) = struct.unpack("<I", fh.read(4))
        name = fh.read(n).decode("utf-8")
        (ndim,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
        size = int(np.prod(shape)) if ndim else 1
        out[name] = np.frombuffer(fh.read(8 * size), dtype="<f8").reshape(shape).astype(np.float64)
    return out


def save_checkpoint(named, path):
    with open(path, "wb") as fh:
        dump_parameters(named, fh)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return load_parameters(fh)
