"""
FSCK1 parameter checkpoint format.

Layout (little-endian):
    b"FSCK1"
    uint32  record count
    per record:
        uint32  name length, then UTF-8 name bytes
        uint32  rank, then rank x uint32 dims
        float32 payload, row-major
"""

import io
import os
import struct
from collections import OrderedDict
from typing import Mapping, Union

import numpy as np

from ferroscope.utils.errors import FormatError
from ferroscope.utils.fileio import atomic_write_bytes

MAGIC = b"FSCK1"


def encode_parameters(params: Mapping[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", len(params)))
    for name, value in params.items():
        encoded = name.encode("utf-8")
        array = np.ascontiguousarray(value, dtype="<f4")
        buf.write(struct.pack("<I", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<I", array.ndim))
        buf.write(struct.pack(f"<{array.ndim}I", *array.shape))
        buf.write(array.tobytes())
    return buf.getvalue()


def decode_parameters(payload: bytes) -> "OrderedDict[str, np.ndarray]":
    if payload[:len(MAGIC)] != MAGIC:
        raise FormatError("Not an FSCK1 checkpoint (bad magic)")
    view = memoryview(payload)
    offset = len(MAGIC)

    def take(n: int) -> memoryview:
        nonlocal offset
        if offset + n > len(view):
            raise FormatError("Truncated FSCK1 checkpoint")
        chunk = view[offset:offset + n]
        offset += n
        return chunk

    (count,) = struct.unpack("<I", take(4))
    params: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = bytes(take(name_len)).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        dims = struct.unpack(f"<{rank}I", take(4 * rank)) if rank else ()
        size = int(np.prod(dims)) if dims else 1
        data = np.frombuffer(take(4 * size), dtype="<f4").reshape(dims)
        params[name] = data.astype(np.float32)
    if offset != len(view):
        raise FormatError("Trailing bytes after FSCK1 records")
    return params


def save_parameters(path: Union[str, os.PathLike], params: Mapping[str, np.ndarray]) -> None:
    atomic_write_bytes(path, encode_parameters(params))


def load_parameters(path: Union[str, os.PathLike]) -> "OrderedDict[str, np.ndarray]":
    with open(path, "rb") as fh:
        return decode_parameters(fh.read())
