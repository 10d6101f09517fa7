"""Named-tensor container: versioned binary file, bit-exact round-trip.

Layout (all integers little-endian):
  magic   8 bytes  b"MMTENSR1"
  count   uint32
  entry*  uint16 name length, name utf-8, uint8 dtype code, uint8 ndim,
          uint32 per dim, raw little-endian payload
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"MMTENSR1"

_DTYPES = {0: "<f8", 1: "<f4", 2: "<i8", 3: "<i4", 4: "|b1"}
_CODES = {np.dtype(d): c for c, d in _DTYPES.items()}


class CheckpointError(IOError):
    pass


def save_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    path = Path(path)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            arr = np.asarray(arr)
            code = _CODES.get(arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype)
            if code is None:
                raise CheckpointError(f"unsupported dtype {arr.dtype} for tensor {name!r}")
            raw = name.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<BB", code, arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<I", dim))
            f.write(np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes())


def load_tensors(path) -> dict[str, np.ndarray]:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(MAGIC) + 4 or data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a tensor container (bad header)")
    off = len(MAGIC)
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    out: dict[str, np.ndarray] = {}
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", data, off)
            off += 2
            name = data[off: off + name_len].decode("utf-8")
            off += name_len
            code, ndim = struct.unpack_from("<BB", data, off)
            off += 2
            if code not in _DTYPES:
                raise CheckpointError(f"{path}: unknown dtype code {code}")
            shape = struct.unpack_from(f"<{ndim}I", data, off) if ndim else ()
            off += 4 * ndim
            dt = np.dtype(_DTYPES[code])
            nbytes = dt.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dt.itemsize
            arr = np.frombuffer(data, dtype=dt, count=nbytes // dt.itemsize, offset=off)
            off += nbytes
            out[name] = arr.reshape(shape).copy()
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"{path}: truncated or corrupt container") from exc
    if off != len(data):
        raise CheckpointError(f"{path}: trailing bytes after {count} tensors")
    return out
