"""PTNS tensor file format.

Layout (all integers little-endian)::

    b"PTNS" | u16 version=1 | u8 dtype | u8 ndim | ndim * u32 dims
    | payload (row-major) | u32 CRC32(payload)

dtype codes: 0 = float32, 1 = float64, 2 = uint16 (labels).
"""

from __future__ import annotations

import os
import struct
import zlib

import numpy as np

from ..errors import BadMagic, CrcMismatch, TruncatedFile, VersionUnsupported

MAGIC = b"PTNS"
VERSION = 1
DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8"), 2: np.dtype("<u2")}
CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1, np.dtype("uint16"): 2}
_HEAD = struct.Struct("<4sHBB")


def encode_tensor(array) -> bytes:
    arr = np.asarray(array)
    if arr.dtype not in CODES:
        raise TypeError(f"unsupported dtype {arr.dtype}; use float32, float64 or uint16")
    if arr.ndim > 255:
        raise ValueError("too many dimensions")
    code = CODES[arr.dtype]
    payload = np.ascontiguousarray(arr, dtype=DTYPES[code]).tobytes()
    header = _HEAD.pack(MAGIC, VERSION, code, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + dims + payload + struct.pack("<I", zlib.crc32(payload))


def decode_tensor(data: bytes) -> np.ndarray:
    if len(data) < _HEAD.size:
        raise TruncatedFile("file shorter than PTNS header")
    magic, version, code, ndim = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionUnsupported(f"PTNS version {version} not supported")
    if code not in DTYPES:
        raise VersionUnsupported(f"unknown dtype code {code}")
    offset = _HEAD.size
    if len(data) < offset + 4 * ndim:
        raise TruncatedFile("truncated dimension table")
    shape = struct.unpack_from(f"<{ndim}I", data, offset)
    offset += 4 * ndim
    dtype = DTYPES[code]
    nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(data) < offset + nbytes + 4:
        raise TruncatedFile("truncated payload")
    if len(data) > offset + nbytes + 4:
        raise TruncatedFile("trailing bytes after checksum")
    payload = data[offset:offset + nbytes]
    (crc,) = struct.unpack_from("<I", data, offset + nbytes)
    if zlib.crc32(payload) != crc:
        raise CrcMismatch("payload checksum mismatch")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))


def save_tensor(path, array) -> None:
    data = encode_tensor(array)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_tensor(fh.read())
