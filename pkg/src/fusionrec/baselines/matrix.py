"""Sparse ratings matrix with per-user/per-item means, built from a train split."""

from __future__ import annotations

import numpy as np

from ..data.movielens import RatingRecord
from ..errors import DataError


class RatingsMatrix:
    """Dense user x item layout over the ids seen in training.

    Stored ratings are in [1, 5]; means are over observed entries only. The
    matrix and mask are read-only after construction, so prediction is safe to
    share across threads.
    """

    def __init__(self, records: list[RatingRecord]):
        if not records:
            raise DataError("cannot build a ratings matrix from no records")
        user_ids = sorted({r.user_id for r in records})
        item_ids = sorted({r.movie_id for r in records})
        self.user_index = {u: i for i, u in enumerate(user_ids)}
        self.item_index = {m: i for i, m in enumerate(item_ids)}
        self.user_ids = user_ids
        self.item_ids = item_ids
        n_u, n_i = len(user_ids), len(item_ids)
        dtype = np.float64 if n_u * n_i <= 8_000_000 else np.float32
        self.ratings = np.zeros((n_u, n_i), dtype=dtype)
        self.mask = np.zeros((n_u, n_i), dtype=dtype)
        for r in records:
            u = self.user_index[r.user_id]
            i = self.item_index[r.movie_id]
            if self.mask[u, i]:
                # duplicate interaction: keep the last one, like a re-rating
                pass
            self.ratings[u, i] = r.rating
            self.mask[u, i] = 1.0

        counts_u = self.mask.sum(axis=1)
        counts_i = self.mask.sum(axis=0)
        with np.errstate(invalid="ignore"):
            self.user_mean = np.where(counts_u > 0,
                                      self.ratings.sum(axis=1) / np.maximum(counts_u, 1), 0.0)
            self.item_mean = np.where(counts_i > 0,
                                      self.ratings.sum(axis=0) / np.maximum(counts_i, 1), 0.0)
        self.user_rated = counts_u > 0
        self.item_rated = counts_i > 0
        self.global_mean = float(self.ratings.sum() / self.mask.sum())

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    def item_mean_of(self, movie_id: int) -> float | None:
        col = self.item_index.get(movie_id)
        if col is None or not self.item_rated[col]:
            return None
        return float(self.item_mean[col])

    def user_mean_of(self, user_id: int) -> float | None:
        row = self.user_index.get(user_id)
        if row is None or not self.user_rated[row]:
            return None
        return float(self.user_mean[row])
