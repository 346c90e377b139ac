from .matrix import RatingsMatrix
from .neighbors import (DEFAULT_K, MIN_OVERLAP, NeighborModel, clamp,
                        item_cf_predict, user_cf_predict)
from .svd import FactorModel, sgd_objective, svd_train
from .report import BASELINE_METHODS, baseline_report, predictions_rmse, run_baseline

__all__ = [
    "RatingsMatrix", "DEFAULT_K", "MIN_OVERLAP", "NeighborModel", "clamp",
    "item_cf_predict", "user_cf_predict", "FactorModel", "sgd_objective",
    "svd_train", "BASELINE_METHODS", "baseline_report", "predictions_rmse",
    "run_baseline",
]
