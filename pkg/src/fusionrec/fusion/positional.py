"""Fixed sinusoidal position encoding.

P[pos, 2i]   = sin(pos / 10000^(2i/d))
P[pos, 2i+1] = cos(pos / 10000^(2i/d))

Deterministic, no trainable parts; values lie in [-1, 1].
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


def positional_encoding(seq_len: int, d: int) -> np.ndarray:
    if d % 2 != 0:
        raise ShapeError(f"position encoding needs an even width, got {d}")
    pos = np.arange(seq_len, dtype=np.float64)[:, None]
    i = np.arange(d // 2, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * i / d)
    out = np.empty((seq_len, d), dtype=np.float64)
    out[:, 0::2] = np.sin(angle)
    out[:, 1::2] = np.cos(angle)
    return out
