"""Binary container for trained parameters.

Layout (all integers little-endian)::

    magic   4 bytes  b"ABCW"
    version u16
    layers  u32
    per layer:
        kind tag   u8
        arrays     u8
        per array:
            ndim   u8
            dims   u32 * ndim
            data   float64 little-endian, C order
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

MAGIC = b"ABCW"
VERSION = 1


class ParameterFormatError(ValueError):
    pass


def dumps(layers: list[tuple[int, list[np.ndarray]]]) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<HI", VERSION, len(layers)))
    for tag, arrays in layers:
        buf.write(struct.pack("<BB", tag, len(arrays)))
        for arr in arrays:
            arr = np.ascontiguousarray(arr, dtype="<f8")
            buf.write(struct.pack("<B", arr.ndim))
            buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            buf.write(arr.tobytes())
    return buf.getvalue()


def loads(data: bytes) -> list[tuple[int, list[np.ndarray]]]:
    view = memoryview(data)
    if bytes(view[:4]) != MAGIC:
        raise ParameterFormatError("bad magic; not a parameter container")
    version, count = struct.unpack_from("<HI", view, 4)
    if version != VERSION:
        raise ParameterFormatError(f"unsupported container version {version} (expected {VERSION})")
    offset = 10
    layers = []
    try:
        for _ in range(count):
            tag, n_arrays = struct.unpack_from("<BB", view, offset)
            offset += 2
            arrays = []
            for _ in range(n_arrays):
                (ndim,) = struct.unpack_from("<B", view, offset)
                offset += 1
                dims = struct.unpack_from(f"<{ndim}I", view, offset)
                offset += 4 * ndim
                size = int(np.prod(dims)) if ndim else 1
                arr = np.frombuffer(view, dtype="<f8", count=size, offset=offset).reshape(dims).astype(np.float64)
                offset += 8 * size
                arrays.append(arr)
            layers.append((tag, arrays))
    except (struct.error, ValueError) as exc:
        raise ParameterFormatError(f"truncated parameter container: {exc}") from exc
    if offset != len(data):
        raise ParameterFormatError("trailing bytes after last layer")
    return layers


def network_layers(net) -> list[tuple[int, list[np.ndarray]]]:
    return [(inst.layer.tag, list(inst.layer.params)) for inst in net.layers]


def save_parameters(net, path) -> Path:
    path = Path(path)
    path.write_bytes(dumps(network_layers(net)))
    return path


def load_parameters(path) -> list[tuple[int, list[np.ndarray]]]:
    return loads(Path(path).read_bytes())


def apply_parameters(net, layers: list[tuple[int, list[np.ndarray]]]):
    """Copy loaded arrays into a network with the same structure."""
    if len(layers) != len(net.layers):
        raise ParameterFormatError(f"layer count mismatch: {len(layers)} vs {len(net.layers)}")
    for inst, (tag, arrays) in zip(net.layers, layers):
        if tag != inst.layer.tag or len(arrays) != len(inst.layer.params):
            raise ParameterFormatError(f"layer {inst.token!r} does not match stored kind tag {tag}")
        for p, a in zip(inst.layer.params, arrays):
            if p.shape != a.shape:
                raise ParameterFormatError(f"shape mismatch in {inst.token!r}: {p.shape} vs {a.shape}")
            p[...] = a
