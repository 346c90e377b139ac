"""Modality embedding stores and the MMEB binary file format.

MMEB layout (little-endian): magic "MMEB", version u32 = 1, modality tag u8
(0 title, 1 intro, 2 poster), count u32, dim u32, then count records of
(movie id u32, dim float32 values). Files written by the extractor are
consumed here bit-exactly; dim must be 768 on disk. In-memory stores may use
other dims for small-model tests.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..tensor import Tensor

MAGIC = b"MMEB"
VERSION = 1
STORE_DIM = 768
MODALITIES = ("title", "intro", "poster")


class EmbeddingStore:
    """id -> vector map for one modality, plus a trainable missing-token.

    Lookups never fail: an absent id resolves to the shared missing-token row,
    whose gradient accumulates across every miss in a batch. Reads are counted
    so tests can assert a modality was never touched.
    """

    def __init__(self, modality: str, dim: int = STORE_DIM,
                 vectors: dict[int, np.ndarray] | None = None,
                 init_seed: int = 0):
        if modality not in MODALITIES:
            raise DataError(f"unknown modality {modality!r}")
        self.modality = modality
        self.dim = dim
        self.vectors: dict[int, np.ndarray] = {}
        for key, vec in (vectors or {}).items():
            self._insert(key, vec)
        rng = np.random.default_rng(init_seed)
        self.missing = Tensor(rng.uniform(-0.02, 0.02, (1, dim)),
                              requires_grad=True, name=f"store.{modality}.missing")
        self._missing_row = self.missing.data[0]
        self.access_count = 0

    def _insert(self, key: int, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=np.float64).reshape(-1)
        if vec.shape != (self.dim,):
            raise DataError(f"vector for id {key} has length {vec.size}, "
                            f"expected {self.dim}")
        if not np.all(np.isfinite(vec)):
            raise DataError(f"non-finite embedding for id {key}")
        if key in self.vectors:
            raise DataError(f"duplicate id {key} in {self.modality} store")
        self.vectors[key] = vec

    def __len__(self) -> int:
        return len(self.vectors)

    def lookup(self, movie_id: int) -> np.ndarray:
        """Stored vector, or the shared missing-token row for absent ids."""
        self.access_count += 1
        got = self.vectors.get(movie_id)
        return got if got is not None else self._missing_row

    def batch(self, movie_ids) -> tuple[np.ndarray, np.ndarray]:
        """(matrix of stored vectors with zero rows at misses, miss indicator column)."""
        ids = list(movie_ids)
        self.access_count += len(ids)
        mat = np.zeros((len(ids), self.dim))
        miss = np.zeros((len(ids), 1))
        for i, mid in enumerate(ids):
            vec = self.vectors.get(mid)
            if vec is None:
                miss[i, 0] = 1.0
            else:
                mat[i] = vec
        return mat, miss


def write_store(path: str | Path, modality: str,
                vectors: dict[int, np.ndarray], dim: int = STORE_DIM) -> None:
    tag = MODALITIES.index(modality)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IBI I", VERSION, tag, len(vectors), dim))
        for key in vectors:
            vec = np.ascontiguousarray(vectors[key], dtype="<f4").reshape(-1)
            if vec.size != dim:
                raise DataError(f"vector for id {key} has length {vec.size}, "
                                f"expected {dim}")
            f.write(struct.pack("<I", key))
            f.write(vec.tobytes())


def load_store(path: str | Path, init_seed: int = 0) -> EmbeddingStore:
    """Read an MMEB file; enforces magic, version, dim=768, and unique ids."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing store file: {path}")
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise DataError(f"bad store magic in {path}")
    try:
        version, tag, count, dim = struct.unpack_from("<IBII", blob, 4)
    except struct.error as exc:
        raise DataError(f"truncated store header in {path}") from exc
    if version != VERSION:
        raise DataError(f"unsupported store version {version} in {path}")
    if tag >= len(MODALITIES):
        raise DataError(f"unknown modality tag {tag} in {path}")
    if dim != STORE_DIM:
        raise DataError(f"dim mismatch in {path}: header says {dim}, "
                        f"expected {STORE_DIM}")
    record = 4 + 4 * dim
    off = 17
    if len(blob) != off + count * record:
        raise DataError(f"truncated store: {path} has {len(blob)} bytes, "
                        f"expected {off + count * record}")
    store = EmbeddingStore(MODALITIES[tag], dim=dim, init_seed=init_seed)
    for _ in range(count):
        (key,) = struct.unpack_from("<I", blob, off)
        vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=off + 4)
        store._insert(key, vec.astype(np.float64))
        off += record
    return store
