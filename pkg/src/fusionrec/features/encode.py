"""Low-dimensional encodings for structured features.

Each structured feature becomes a small vector (one-hot, multi-hot, hashed
one-hot, or a normalized scalar) that the upsampling layers lift to the
shared token width. Zip codes hash with FNV-1a 64 so buckets are stable
across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    h = FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class FeatureSpec:
    """One structured feature and how it is encoded before upsampling."""

    name: str
    kind: str  # categorical | multi_hot | hashed | scalar
    dim: int  # cardinality / bucket count / 1 for scalar
    slot: int  # position 1..10 in the token sequence

    def __post_init__(self):
        if self.kind not in ("categorical", "multi_hot", "hashed", "scalar"):
            raise DataError(f"unknown feature kind {self.kind!r}")
        if not 1 <= self.slot <= 10:
            raise DataError(f"slot {self.slot} outside 1..10")
        if self.dim < 1:
            raise DataError("feature dim must be >= 1")


def encode_low(spec: FeatureSpec, value) -> np.ndarray:
    """Encode one raw value as a 1 x dim row vector."""
    out = np.zeros((1, spec.dim))
    if spec.kind == "categorical":
        idx = int(value)
        if not 0 <= idx < spec.dim:
            raise DataError(f"{spec.name}: category index {idx} outside "
                            f"[0, {spec.dim})")
        out[0, idx] = 1.0
    elif spec.kind == "multi_hot":
        indices = list(value)
        if not indices:
            raise DataError(f"{spec.name}: empty multi-hot set")
        for idx in indices:
            if not 0 <= int(idx) < spec.dim:
                raise DataError(f"{spec.name}: index {idx} outside [0, {spec.dim})")
            out[0, int(idx)] = 1.0
    elif spec.kind == "hashed":
        out[0, fnv1a64(str(value)) % spec.dim] = 1.0
    else:  # scalar, already normalized by the caller
        out[0, 0] = float(value)
    return out
