"""Biased matrix factorization fit by SGD on observed ratings (FunkSVD).

Prediction is mu + b_u + b_i + p_u . q_i; unknown users or items simply drop
their terms, so a fully cold pair degrades to the global mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericError
from .matrix import RatingsMatrix
from .neighbors import clamp


@dataclass
class FactorModel:
    global_mean: float
    user_bias: np.ndarray
    item_bias: np.ndarray
    user_factors: np.ndarray  # n_users x k
    item_factors: np.ndarray  # n_items x k
    user_index: dict[int, int]
    item_index: dict[int, int]

    def predict(self, user_id: int, movie_id: int) -> float:
        est = self.global_mean
        u = self.user_index.get(user_id)
        i = self.item_index.get(movie_id)
        if u is not None:
            est += self.user_bias[u]
        if i is not None:
            est += self.item_bias[i]
        if u is not None and i is not None:
            est += float(self.user_factors[u] @ self.item_factors[i])
        return clamp(est)


def svd_train(matrix: RatingsMatrix, k: int = 50, lr: float = 0.005,
              reg: float = 0.02, epochs: int = 30, seed: int = 7,
              init_sd: float = 0.1) -> FactorModel:
    """SGD over the observed entries, shuffled each epoch; deterministic per seed."""
    if k < 1:
        raise ConfigError(f"factor count must be >= 1, got {k}")
    if k > min(matrix.n_users, matrix.n_items):
        raise ConfigError(f"k={k} exceeds min(n_users, n_items)="
                          f"{min(matrix.n_users, matrix.n_items)}")
    rng = np.random.default_rng(seed)
    n_u, n_i = matrix.n_users, matrix.n_items
    bu = np.zeros(n_u)
    bi = np.zeros(n_i)
    p = rng.normal(0.0, init_sd, (n_u, k))
    q = rng.normal(0.0, init_sd, (n_i, k))
    mu = matrix.global_mean

    rows, cols = np.nonzero(matrix.mask)
    values = matrix.ratings[rows, cols].astype(np.float64)
    for epoch in range(epochs):
        order = rng.permutation(len(values))
        for idx in order:
            u, i, r = rows[idx], cols[idx], values[idx]
            pu = p[u]
            qi = q[i]
            err = r - (mu + bu[u] + bi[i] + pu @ qi)
            bu[u] += lr * (err - reg * bu[u])
            bi[i] += lr * (err - reg * bi[i])
            p[u] = pu + lr * (err * qi - reg * pu)
            q[i] = qi + lr * (err * pu - reg * qi)
        if not (np.isfinite(bu).all() and np.isfinite(bi).all()
                and np.isfinite(p).all() and np.isfinite(q).all()):
            raise NumericError(
                f"factorization diverged at epoch {epoch + 1} with lr={lr}; "
                f"lower the learning rate")
    return FactorModel(mu, bu, bi, p, q,
                       dict(matrix.user_index), dict(matrix.item_index))


def sgd_objective(model: FactorModel, matrix: RatingsMatrix, reg: float) -> float:
    """Squared error over observed entries plus the L2 penalty."""
    rows, cols = np.nonzero(matrix.mask)
    preds = (model.global_mean + model.user_bias[rows] + model.item_bias[cols]
             + np.sum(model.user_factors[rows] * model.item_factors[cols], axis=1))
    err = matrix.ratings[rows, cols] - preds
    penalty = (np.sum(model.user_bias ** 2) + np.sum(model.item_bias ** 2)
               + np.sum(model.user_factors ** 2) + np.sum(model.item_factors ** 2))
    return float(np.sum(err ** 2) + reg * penalty)
