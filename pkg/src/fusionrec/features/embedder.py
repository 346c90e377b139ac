"""Trainable embedding stack: raw features to the ten 768-dim sequence tokens.

Fixed slot order: 1 user id, 2 gender, 3 age, 4 occupation, 5 zip,
6 movie id, 7 genres, 8 title embedding, 9 intro embedding, 10 poster
embedding. Ids go through a small lookup table and a shared two-layer
upsampler; the other structured features get their own upsampler each
(dense -> ReLU -> dense -> ReLU); store vectors pass through a trainable
square linear adapter. In single-modal mode the poster slot is fed from the
missing-token alone and the poster store is never read.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from ..data.movielens import (AGE_BUCKETS_1M, GENRES_100K, GENRES_1M, ML100K,
                              ML1M, MovieMeta, OCCUPATIONS_100K, UserProfile)
from ..tensor import Tape, Tensor
from .encode import FeatureSpec, fnv1a64
from .store import EmbeddingStore

SLOT_NAMES = ("user_id", "gender", "age", "occupation", "zip", "movie_id",
              "genres", "title", "intro", "poster")
N_SLOTS = 10
INIT_SCALE = 0.02


def structured_feature_specs(fmt: str, zip_buckets: int = 1000) -> dict[str, FeatureSpec]:
    """The low-dim encodings for the non-id, non-store slots."""
    age = (FeatureSpec("age", "scalar", 1, 3) if fmt == ML100K
           else FeatureSpec("age", "categorical", len(AGE_BUCKETS_1M), 3))
    genres = FeatureSpec("genres", "multi_hot",
                         len(GENRES_100K) if fmt == ML100K else len(GENRES_1M), 7)
    return {
        "gender": FeatureSpec("gender", "categorical", 2, 2),
        "age": age,
        "occupation": FeatureSpec("occupation", "categorical",
                                  len(OCCUPATIONS_100K), 4),
        "zip": FeatureSpec("zip", "hashed", zip_buckets, 5),
        "genres": genres,
    }


class FeatureTables:
    """Per-dataset index arrays so batch assembly is pure fancy indexing."""

    def __init__(self, users: list[UserProfile], movies: list[MovieMeta],
                 fmt: str, zip_buckets: int = 1000):
        if fmt not in (ML100K, ML1M):
            raise DataError(f"unknown format {fmt!r}")
        self.fmt = fmt
        self.specs = structured_feature_specs(fmt, zip_buckets)
        self.n_users = max(u.user_id for u in users)
        self.n_items = max(m.movie_id for m in movies)
        cap_u, cap_i = self.n_users + 1, self.n_items + 1

        self.gender_idx = np.zeros(cap_u, dtype=np.int64)
        self.occ_idx = np.zeros(cap_u, dtype=np.int64)
        self.zip_idx = np.zeros(cap_u, dtype=np.int64)
        if fmt == ML100K:
            ages = np.array([u.age for u in users], dtype=np.float64)
            lo, hi = ages.min(), ages.max()
            span = (hi - lo) or 1.0
            self.age_val = np.zeros(cap_u, dtype=np.float64)
        else:
            bucket_of = {code: i for i, code in enumerate(AGE_BUCKETS_1M)}
            self.age_idx = np.zeros(cap_u, dtype=np.int64)
        occ_of = {name: i for i, name in enumerate(OCCUPATIONS_100K)}
        for u in users:
            self.gender_idx[u.user_id] = 0 if u.gender == "M" else 1
            if fmt == ML100K:
                if u.occupation not in occ_of:
                    raise DataError(f"unknown occupation {u.occupation!r}")
                self.occ_idx[u.user_id] = occ_of[u.occupation]
                self.age_val[u.user_id] = (u.age - lo) / span
            else:
                self.occ_idx[u.user_id] = int(u.occupation)
                self.age_idx[u.user_id] = bucket_of[u.age]
            self.zip_idx[u.user_id] = fnv1a64(u.zip) % zip_buckets

        genre_list = GENRES_100K if fmt == ML100K else GENRES_1M
        genre_of = {name: i for i, name in enumerate(genre_list)}
        self.genre_hot = np.zeros((cap_i, len(genre_list)), dtype=np.float64)
        for m in movies:
            for g in m.genres:
                if g in genre_of:
                    self.genre_hot[m.movie_id, genre_of[g]] = 1.0


@dataclass
class Upsampler:
    """dense -> ReLU -> dense -> ReLU lifting a low-dim encoding to width d."""

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    def apply(self, tape: Tape, x: Tensor) -> Tensor:
        h = tape.relu(tape.add(tape.matmul(x, self.w1), self.b1))
        return tape.relu(tape.add(tape.matmul(h, self.w2), self.b2))

    def apply_indexed(self, tape: Tape, idx: np.ndarray) -> Tensor:
        """One-hot inputs as row gathers: rows w1[idx] == onehot(idx) @ w1."""
        h = tape.relu(tape.add(tape.gather_rows(self.w1, idx), self.b1))
        return tape.relu(tape.add(tape.matmul(h, self.w2), self.b2))

    def params(self) -> list[Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]


class FeatureEmbedder:
    """Owns every trainable tensor between raw features and the token matrix."""

    def __init__(self, tables: FeatureTables, stores: dict[str, EmbeddingStore | None],
                 d: int = 768, up_hidden: int = 256, id_dim: int = 64,
                 mode: str = "cross", init_seed: int = 1234, dtype=np.float64):
        if mode not in ("single", "cross"):
            raise ConfigError(f"modality mode must be single or cross, got {mode!r}")
        self.tables = tables
        self.stores = stores
        self.d = d
        self.mode = mode
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(init_seed)
        self._params: dict[str, Tensor] = {}

        def param(name: str, rows: int, cols: int, zero: bool = False,
                  xavier: bool = False, identity: bool = False) -> Tensor:
            # lookup tables and special tokens keep the small uniform init;
            # dense layers are variance-preserving and adapters start at the
            # identity so store vectors reach the encoder at full scale
            if zero:
                data = np.zeros((rows, cols))
            elif identity:
                data = np.eye(rows, cols) + rng.uniform(-INIT_SCALE, INIT_SCALE,
                                                        (rows, cols))
            elif xavier:
                limit = np.sqrt(6.0 / (rows + cols))
                data = rng.uniform(-limit, limit, (rows, cols))
            else:
                data = rng.uniform(-INIT_SCALE, INIT_SCALE, (rows, cols))
            t = Tensor(data.astype(self.dtype), requires_grad=True,
                       name=f"embed.{name}")
            self._params[t.name] = t
            return t

        self.user_table = param("user_table", tables.n_users + 1, id_dim)
        self.movie_table = param("movie_table", tables.n_items + 1, id_dim)
        self.id_upsampler = self._make_upsampler(param, "id", id_dim, up_hidden)
        self.upsamplers = {
            name: self._make_upsampler(param, name, spec.dim, up_hidden)
            for name, spec in tables.specs.items()
        }
        self.adapters = {}
        self.missing = {}
        for modality in ("title", "intro", "poster"):
            self.adapters[modality] = (param(f"adapt_{modality}.w", d, d, identity=True),
                                       param(f"adapt_{modality}.b", 1, d, zero=True))
            store = stores.get(modality)
            if store is not None and self._uses_store(modality):
                # adopt the store's trainable missing-token as a model parameter
                store.missing.data = store.missing.data.astype(self.dtype)
                store._missing_row = store.missing.data[0]
                store.missing.name = f"embed.missing_{modality}"
                self._params[store.missing.name] = store.missing
                self.missing[modality] = store.missing
            else:
                self.missing[modality] = param(f"missing_{modality}", 1, d)

        # dense per-item views of the stores actually in use
        self._store_mat: dict[str, np.ndarray] = {}
        self._store_miss: dict[str, np.ndarray] = {}
        cap_i = tables.n_items + 1
        for modality in ("title", "intro", "poster"):
            store = stores.get(modality)
            if store is None or not self._uses_store(modality):
                continue
            if store.dim != d:
                raise ConfigError(f"{modality} store dim {store.dim} != model d {d}")
            mat = np.zeros((cap_i, d), dtype=self.dtype)
            miss = np.ones((cap_i, 1), dtype=self.dtype)
            for mid, vec in store.vectors.items():
                if mid < cap_i:
                    mat[mid] = vec
                    miss[mid, 0] = 0.0
            store.access_count += len(store.vectors)
            self._store_mat[modality] = mat
            self._store_miss[modality] = miss

    def _uses_store(self, modality: str) -> bool:
        return self.mode == "cross" or modality != "poster"

    def _make_upsampler(self, param, name: str, low: int, hidden: int) -> Upsampler:
        return Upsampler(param(f"up_{name}.w1", low, hidden, xavier=True),
                         param(f"up_{name}.b1", 1, hidden, zero=True),
                         param(f"up_{name}.w2", hidden, self.d, xavier=True),
                         param(f"up_{name}.b2", 1, self.d, zero=True))

    def params(self) -> dict[str, Tensor]:
        return dict(self._params)

    def id_embed(self, tape: Tape, table: Tensor, ids: np.ndarray) -> Tensor:
        """Trainable lookup rows; errors on ids outside table capacity."""
        return tape.gather_rows(table, ids)

    def _store_token(self, tape: Tape, modality: str, movie_ids: np.ndarray) -> Tensor:
        missing = self.missing[modality]
        n = len(movie_ids)
        if modality in self._store_mat:
            const = Tensor(self._store_mat[modality][movie_ids])
            miss_col = Tensor(self._store_miss[modality][movie_ids])
            raw = tape.add(const, tape.matmul(miss_col, missing))
        else:
            ones = Tensor(np.ones((n, 1), dtype=self.dtype))
            raw = tape.matmul(ones, missing)
        w, b = self.adapters[modality]
        return tape.add(tape.matmul(raw, w), b)

    def slot_tokens(self, tape: Tape, user_ids: np.ndarray,
                    movie_ids: np.ndarray) -> list[Tensor]:
        """The ten B x d token matrices in slot order for one batch."""
        t = self.tables
        specs = t.specs
        user_tok = self.id_upsampler.apply(
            tape, self.id_embed(tape, self.user_table, user_ids))
        movie_tok = self.id_upsampler.apply(
            tape, self.id_embed(tape, self.movie_table, movie_ids))
        gender_tok = self.upsamplers["gender"].apply_indexed(
            tape, t.gender_idx[user_ids])
        if specs["age"].kind == "scalar":
            age_in = Tensor(t.age_val[user_ids].reshape(-1, 1).astype(self.dtype))
            age_tok = self.upsamplers["age"].apply(tape, age_in)
        else:
            age_tok = self.upsamplers["age"].apply_indexed(tape, t.age_idx[user_ids])
        occ_tok = self.upsamplers["occupation"].apply_indexed(
            tape, t.occ_idx[user_ids])
        zip_tok = self.upsamplers["zip"].apply_indexed(tape, t.zip_idx[user_ids])
        genre_in = Tensor(t.genre_hot[movie_ids].astype(self.dtype))
        genre_tok = self.upsamplers["genres"].apply(tape, genre_in)
        return [
            user_tok, gender_tok, age_tok, occ_tok, zip_tok, movie_tok, genre_tok,
            self._store_token(tape, "title", movie_ids),
            self._store_token(tape, "intro", movie_ids),
            self._store_token(tape, "poster", movie_ids),
        ]
