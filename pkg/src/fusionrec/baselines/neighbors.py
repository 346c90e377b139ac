"""User-based and item-based k-nearest-neighbor collaborative filtering.

Similarity contract (shared with the brute-force test oracle):

* user-user: cosine over the co-rated items, each user centered by their own
  overall mean; defined only when the overlap has >= 2 items and both
  centered sub-vectors are nonzero.
* item-item: adjusted cosine over co-raters (centered by the rater's user
  mean), same overlap/denominator rules.

Prediction is the target mean plus the |sim|-normalized weighted sum of the
k most similar neighbors' centered ratings; neighbors order by similarity
then by id, so ties resolve deterministically. Neighborless cases fall back
(item mean then global for user-CF, user mean then global for item-CF) and
every prediction is clamped to [1, 5].
"""

from __future__ import annotations

import numpy as np

from .matrix import RatingsMatrix

MIN_OVERLAP = 2
DEFAULT_K = 40
_TINY = 1e-12


def clamp(x: float) -> float:
    return float(min(5.0, max(1.0, x)))


class _SimilarityCache:
    __slots__ = ("sim", "valid")

    def __init__(self, sim: np.ndarray, valid: np.ndarray):
        self.sim = sim
        self.valid = valid


def _user_similarity(m: RatingsMatrix) -> _SimilarityCache:
    centered = (m.ratings - m.user_mean[:, None]) * m.mask
    overlap = m.mask @ m.mask.T
    num = centered @ centered.T
    sq = centered * centered
    # pairwise denominators over the co-rated subset only
    d1 = sq @ m.mask.T
    den = np.sqrt(d1 * d1.T)
    valid = (overlap >= MIN_OVERLAP) & (den > _TINY)
    np.fill_diagonal(valid, False)
    sim = np.zeros_like(num)
    np.divide(num, den, out=sim, where=valid)
    return _SimilarityCache(sim, valid)


def _item_similarity(m: RatingsMatrix) -> _SimilarityCache:
    centered = (m.ratings - m.user_mean[:, None]) * m.mask
    overlap = m.mask.T @ m.mask
    num = centered.T @ centered
    sq = centered * centered
    d1 = sq.T @ m.mask
    den = np.sqrt(d1 * d1.T)
    valid = (overlap >= MIN_OVERLAP) & (den > _TINY)
    np.fill_diagonal(valid, False)
    sim = np.zeros_like(num)
    np.divide(num, den, out=sim, where=valid)
    return _SimilarityCache(sim, valid)


class NeighborModel:
    """Shared predictor for both CF flavors; similarities computed lazily once."""

    def __init__(self, matrix: RatingsMatrix, k: int = DEFAULT_K):
        self.matrix = matrix
        self.k = k
        self._users: _SimilarityCache | None = None
        self._items: _SimilarityCache | None = None

    def _user_sims(self) -> _SimilarityCache:
        if self._users is None:
            self._users = _user_similarity(self.matrix)
        return self._users

    def _item_sims(self) -> _SimilarityCache:
        if self._items is None:
            self._items = _item_similarity(self.matrix)
        return self._items

    def _top_k(self, sims: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        if len(candidates) > self.k:
            # order by similarity descending, id ascending; ids are the sort's
            # secondary key because candidates come in ascending id order
            order = np.argsort(-sims[candidates], kind="stable")[:self.k]
            return candidates[order]
        return candidates

    def predict_user_cf(self, user_id: int, movie_id: int) -> float:
        m = self.matrix
        row = m.user_index.get(user_id)
        col = m.item_index.get(movie_id)
        mu = m.user_mean_of(user_id)
        if row is None or mu is None or col is None:
            return self._fallback_item_first(movie_id)
        cache = self._user_sims()
        raters = np.flatnonzero(m.mask[:, col])
        candidates = raters[cache.valid[row, raters]]
        if candidates.size == 0:
            return self._fallback_item_first(movie_id)
        chosen = self._top_k(cache.sim[row], candidates)
        sims = cache.sim[row, chosen]
        denom = np.abs(sims).sum()
        if denom <= _TINY:
            return self._fallback_item_first(movie_id)
        centered = m.ratings[chosen, col] - m.user_mean[chosen]
        return clamp(mu + float(sims @ centered) / denom)

    def predict_item_cf(self, user_id: int, movie_id: int) -> float:
        m = self.matrix
        row = m.user_index.get(user_id)
        col = m.item_index.get(movie_id)
        target_mean = m.item_mean_of(movie_id)
        if col is None or target_mean is None or row is None:
            return self._fallback_user_first(user_id)
        cache = self._item_sims()
        rated = np.flatnonzero(m.mask[row])
        candidates = rated[cache.valid[col, rated]]
        if candidates.size == 0:
            return self._fallback_user_first(user_id)
        chosen = self._top_k(cache.sim[col], candidates)
        sims = cache.sim[col, chosen]
        denom = np.abs(sims).sum()
        if denom <= _TINY:
            return self._fallback_user_first(user_id)
        centered = m.ratings[row, chosen] - m.item_mean[chosen]
        return clamp(target_mean + float(sims @ centered) / denom)

    def _fallback_item_first(self, movie_id: int) -> float:
        mean = self.matrix.item_mean_of(movie_id)
        return clamp(mean if mean is not None else self.matrix.global_mean)

    def _fallback_user_first(self, user_id: int) -> float:
        mean = self.matrix.user_mean_of(user_id)
        return clamp(mean if mean is not None else self.matrix.global_mean)


def user_cf_predict(matrix: RatingsMatrix, user_id: int, movie_id: int,
                    k: int = DEFAULT_K) -> float:
    return NeighborModel(matrix, k).predict_user_cf(user_id, movie_id)


def item_cf_predict(matrix: RatingsMatrix, user_id: int, movie_id: int,
                    k: int = DEFAULT_K) -> float:
    return NeighborModel(matrix, k).predict_item_cf(user_id, movie_id)
