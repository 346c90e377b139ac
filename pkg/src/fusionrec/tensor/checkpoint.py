"""Parameter checkpoint file format.

Layout (little-endian): magic "FRWT", format version u32, then per parameter:
name length u16, name bytes (utf-8), rows u32, cols u32, rows*cols float32
values. Parameter order is the model's registration order and is preserved
on load.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

MAGIC = b"FRWT"
VERSION = 1


def save_params(path: str | Path, named: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        for name, arr in named.items():
            if arr.ndim != 2:
                raise DataError(f"checkpoint arrays must be 2-D, '{name}' is {arr.ndim}-D")
            raw = name.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_params(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise DataError(f"bad checkpoint magic in {path}")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise DataError(f"unsupported checkpoint version {version} in {path}")
    named: dict[str, np.ndarray] = {}
    off = 8
    while off < len(blob):
        try:
            (nlen,) = struct.unpack_from("<H", blob, off)
            off += 2
            name = blob[off:off + nlen].decode("utf-8")
            off += nlen
            rows, cols = struct.unpack_from("<II", blob, off)
            off += 8
            nbytes = rows * cols * 4
            if off + nbytes > len(blob):
                raise DataError(f"truncated checkpoint at byte {off} in {path}")
            arr = np.frombuffer(blob, dtype="<f4", count=rows * cols, offset=off)
            off += nbytes
        except struct.error as exc:
            raise DataError(f"truncated checkpoint header at byte {off} in {path}") from exc
        if name in named:
            raise DataError(f"duplicate parameter '{name}' in {path}")
        named[name] = arr.reshape(rows, cols).astype(np.float32)
    return named
