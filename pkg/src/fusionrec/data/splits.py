"""Deterministic per-interaction train/validation/test splits and the split manifest.

The manifest is one line per record in the original file order:
"user,movie,rating,timestamp,split" with split in {train, val, test}.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError
from .movielens import RatingRecord

SPLIT_NAMES = ("train", "val", "test")
DEFAULT_RATIOS = (0.9, 0.05, 0.05)
DEFAULT_SEED = 20240901


def assign_splits(n: int, ratios: tuple[float, float, float] = DEFAULT_RATIOS,
                  seed: int = DEFAULT_SEED) -> np.ndarray:
    """Split label (0 train, 1 val, 2 test) per index; sizes within one of exact."""
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ConfigError(f"need three non-negative ratios, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must sum to 1, got {sum(ratios)}")
    n_train = round(n * ratios[0])
    n_val = round(n * ratios[1])
    if n_train + n_val > n:
        n_val = n - n_train
    labels = np.full(n, 2, dtype=np.int8)
    perm = np.random.default_rng(seed).permutation(n)
    labels[perm[:n_train]] = 0
    labels[perm[n_train:n_train + n_val]] = 1
    return labels


def split_dataset(records: list[RatingRecord],
                  ratios: tuple[float, float, float] = DEFAULT_RATIOS,
                  seed: int = DEFAULT_SEED,
                  ) -> tuple[list[RatingRecord], list[RatingRecord], list[RatingRecord]]:
    """Random per-interaction partition; deterministic for a given seed."""
    labels = assign_splits(len(records), ratios, seed)
    parts: tuple[list, list, list] = ([], [], [])
    for rec, lab in zip(records, labels):
        parts[lab].append(rec)
    return parts


def write_manifest(path: str | Path, records: list[RatingRecord],
                   labels: np.ndarray) -> None:
    if len(records) != len(labels):
        raise DataError("one split label per record required")
    with open(path, "w", encoding="ascii") as f:
        for rec, lab in zip(records, labels):
            f.write(f"{rec.user_id},{rec.movie_id},{rec.rating},"
                    f"{rec.timestamp},{SPLIT_NAMES[lab]}\n")


def read_manifest(path: str | Path) -> dict[str, list[RatingRecord]]:
    """Manifest back into per-split record lists (original order preserved)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing manifest: {path}")
    out: dict[str, list[RatingRecord]] = {name: [] for name in SPLIT_NAMES}
    with open(path, encoding="ascii") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5 or parts[4] not in SPLIT_NAMES:
                raise DataError(f"{path}:{lineno}: malformed manifest line")
            try:
                rec = RatingRecord(int(parts[0]), int(parts[1]), int(parts[2]),
                                   int(parts[3]))
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            out[parts[4]].append(rec)
    return out
