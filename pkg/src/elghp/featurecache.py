"""Feature cache files.

A cache is a sequence of records, each::

    u32 name_length | name (UTF-8) | u32 vector_length | vector_length * u32 counts

with every integer big-endian. The count block is byte-identical to a feature
vector on the wire.
"""

from __future__ import annotations

import os
import struct
from collections.abc import Iterable

import numpy as np

_U32 = struct.Struct(">I")


class CacheError(ValueError):
    pass


def encode_vector(features) -> bytes:
    v = np.asarray(features, dtype=np.uint32)
    return _U32.pack(v.shape[0]) + v.astype(">u4").tobytes()


def decode_vector(buf: bytes, pos: int = 0) -> tuple[np.ndarray, int]:
    if pos + 4 > len(buf):
        raise CacheError("truncated vector length")
    (n,) = _U32.unpack_from(buf, pos)
    pos += 4
    end = pos + 4 * n
    if end > len(buf):
        raise CacheError(f"truncated vector: need {4 * n} bytes, have {len(buf) - pos}")
    vec = np.frombuffer(buf, dtype=">u4", count=n, offset=pos).astype(np.uint32)
    return vec, end


def dumps(records: Iterable[tuple[str, np.ndarray]]) -> bytes:
    parts = []
    for name, features in records:
        raw = name.encode("utf-8")
        parts.append(_U32.pack(len(raw)) + raw + encode_vector(features))
    return b"".join(parts)


def loads(buf: bytes) -> list[tuple[str, np.ndarray]]:
    records = []
    pos = 0
    while pos < len(buf):
        if pos + 4 > len(buf):
            raise CacheError("truncated name length")
        (n,) = _U32.unpack_from(buf, pos)
        pos += 4
        if pos + n > len(buf):
            raise CacheError("truncated name")
        name = buf[pos : pos + n].decode("utf-8")
        vec, pos = decode_vector(buf, pos + n)
        records.append((name, vec))
    return records


def write_cache(path: str | os.PathLike, records) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(records))


def read_cache(path: str | os.PathLike) -> list[tuple[str, np.ndarray]]:
    with open(path, "rb") as fh:
        return loads(fh.read())
