"""Binary weight file: ``SDNCWT01`` magic, four little-endian u32 dims, raw f64 payload.

Payload order is W_Q[0..H), W_K[0..H), W_V[0..H), W_O, each row-major
little-endian float64 with no padding.
"""
import struct

import numpy as np

from .controller import LayerParams
from .errors import ShapeError

MAGIC = b"SDNCWT01"
_HEADER = struct.Struct("<4I")
_F64 = np.dtype("<f8")


def file_size(d_model, d_k, d_v, heads):
    n = heads * d_model * d_k * 2 + heads * d_model * d_v + heads * d_v * d_model
    return len(MAGIC) + _HEADER.size + 8 * n


def dumps(params: LayerParams) -> bytes:
    if params.d_source != params.d_model:
        raise ShapeError("weight files only hold layers with d_source == d_model")
    parts = [MAGIC, _HEADER.pack(params.d_model, params.d_k, params.d_v, params.heads)]
    for stack in (params.W_Q, params.W_K, params.W_V):
        parts.extend(m.astype(_F64).tobytes(order="C") for m in stack)
    parts.append(params.W_O.astype(_F64).tobytes(order="C"))
    return b"".join(parts)


def loads(data: bytes) -> LayerParams:
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError("not a weight file (bad magic)")
    if len(data) < len(MAGIC) + _HEADER.size:
        raise ValueError("truncated weight file header")
    d_model, d_k, d_v, H = _HEADER.unpack_from(data, len(MAGIC))
    if len(data) != file_size(d_model, d_k, d_v, H):
        raise ValueError(
            f"weight file is {len(data)} bytes, expected {file_size(d_model, d_k, d_v, H)}"
        )
    offset = len(MAGIC) + _HEADER.size

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype=_F64, count=count, offset=offset).reshape(shape)
        offset += 8 * count
        return arr.astype(np.float64)

    W_Q = take((H, d_model, d_k))
    W_K = take((H, d_model, d_k))
    W_V = take((H, d_model, d_v))
    W_O = take((H * d_v, d_model))
    return LayerParams(W_Q, W_K, W_V, W_O)


def save(params: LayerParams, path):
    with open(path, "wb") as f:
        f.write(dumps(params))


def load(path) -> LayerParams:
    with open(path, "rb") as f:
        return loads(f.read())
