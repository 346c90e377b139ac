"""RMSE harness shared by all traditional baselines."""

from __future__ import annotations

import time

import numpy as np

from ..data.movielens import RatingRecord
from ..errors import ConfigError, DataError
from .matrix import RatingsMatrix
from .neighbors import DEFAULT_K, NeighborModel, clamp
from .svd import svd_train

BASELINE_METHODS = ("user_cf", "item_cf", "svd", "global_mean")


def predictions_rmse(preds: np.ndarray, records: list[RatingRecord]) -> float:
    truth = np.array([r.rating for r in records], dtype=np.float64)
    return float(np.sqrt(np.mean((truth - preds) ** 2)))


def run_baseline(method: str, train_records: list[RatingRecord],
                 eval_records: list[RatingRecord], k: int = DEFAULT_K,
                 svd_factors: int = 50, svd_lr: float = 0.005,
                 svd_reg: float = 0.02, svd_epochs: int = 30,
                 seed: int = 7) -> dict:
    """One results row (shared CSV schema) for one method on one eval split."""
    if method not in BASELINE_METHODS:
        raise ConfigError(f"unknown baseline method {method!r}; "
                          f"choose from {BASELINE_METHODS}")
    if not eval_records:
        raise DataError("empty evaluation split")
    started = time.time()
    matrix = RatingsMatrix(train_records)
    if method == "global_mean":
        preds = np.full(len(eval_records), clamp(matrix.global_mean))
    elif method == "svd":
        model = svd_train(matrix, k=svd_factors, lr=svd_lr, reg=svd_reg,
                          epochs=svd_epochs, seed=seed)
        preds = np.array([model.predict(r.user_id, r.movie_id)
                          for r in eval_records])
    else:
        model = NeighborModel(matrix, k=k)
        predict = (model.predict_user_cf if method == "user_cf"
                   else model.predict_item_cf)
        preds = np.array([predict(r.user_id, r.movie_id) for r in eval_records])
    return {
        "method": method,
        "dataset": "",
        "modality_mode": "-",
        "lr": svd_lr if method == "svd" else None,
        "rmse_train": None,
        "rmse_val": None,
        "rmse_test": predictions_rmse(preds, eval_records),
        "epochs": svd_epochs if method == "svd" else 0,
        "seconds": round(time.time() - started, 3),
    }


def baseline_report(train_records: list[RatingRecord],
                    eval_records: list[RatingRecord],
                    methods=BASELINE_METHODS, dataset: str = "ml100k",
                    **kwargs) -> list[dict]:
    rows = []
    for method in methods:
        row = run_baseline(method, train_records, eval_records, **kwargs)
        row["dataset"] = dataset
        rows.append(row)
    return rows
