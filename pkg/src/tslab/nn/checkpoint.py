"""Binary parameter checkpoints.

Layout (little-endian)::

    b"TSNN"  u32 version  u32 layer_count
    per layer:  u8 kind  u8 n_params
        per param:  u8 ndim  u32 dims[ndim]  f32 data[prod(dims)]

Parameters are written in the layer's ``params`` order (weight, bias).
Loading restores values into a network of the same topology.
"""

from __future__ import annotations

import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .network import Network

MAGIC = b"TSNN"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(net: Network) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(net.layers)))
    for layer in net.layers:
        buf.write(struct.pack("<BB", int(layer.kind), len(layer.params)))
        for p in layer.params.values():
            buf.write(struct.pack("<B", p.ndim))
            buf.write(struct.pack(f"<{p.ndim}I", *p.shape))
            buf.write(np.ascontiguousarray(p, dtype="<f4").tobytes())
    return buf.getvalue()


def loads(net: Network, data: bytes) -> Network:
    view = memoryview(data)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(view):
            raise CheckpointError("checkpoint truncated")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if bytes(take(4)) != MAGIC:
        raise CheckpointError("not a TSNN checkpoint (bad magic)")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if count != len(net.layers):
        raise CheckpointError(f"checkpoint has {count} layers, network has {len(net.layers)}")
    restored = []
    for i, layer in enumerate(net.layers):
        kind, nparams = struct.unpack("<BB", take(2))
        if kind != int(layer.kind) or nparams != len(layer.params):
            raise CheckpointError(f"layer {i}: checkpoint kind/params ({kind}, {nparams}) do not match {layer!r}")
        for name, p in layer.params.items():
            (ndim,) = struct.unpack("<B", take(1))
            shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
            if tuple(shape) != p.shape:
                raise CheckpointError(f"layer {i} {name}: shape {shape} != {p.shape}")
            arr = np.frombuffer(take(4 * int(np.prod(shape, dtype=np.int64))), dtype="<f4").reshape(shape)
            restored.append((layer, name, arr))
    if pos != len(view):
        raise CheckpointError("trailing bytes after checkpoint")
    for layer, name, arr in restored:
        layer.params[name] = arr.astype(net.dtype)
    return net


def save_checkpoint(net: Network, path) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    with os.fdopen(fd, "wb") as fh:
        fh.write(dumps(net))
    os.replace(tmp, path)


def load_checkpoint(net: Network, path) -> Network:
    return loads(net, Path(path).read_bytes())
