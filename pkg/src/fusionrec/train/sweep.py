"""Learning-rate sweep: one trained model per rate, one results row each."""

from __future__ import annotations

from dataclasses import replace
from typing import Callable

from ..errors import ConfigError
from ..fusion.model import FusionModel
from .loop import EvalReport, TrainConfig, evaluate_rmse, train

PAPER_LEARNING_RATES = (0.001, 0.0005, 0.0001)


def lr_sweep(make_model: Callable[[], FusionModel], splits: dict,
             base_cfg: TrainConfig, lrs=PAPER_LEARNING_RATES,
             dataset: str = "ml100k", mode: str = "cross") -> list[dict]:
    """Train a fresh identically-initialized model per learning rate.

    splits holds the "train"/"val"/"test" record lists. Returns one results
    row per rate in the shared CSV schema.
    """
    if not lrs:
        raise ConfigError("sweep needs at least one learning rate")
    rows = []
    for lr in lrs:
        model = make_model()
        report = train(model, splits["train"], splits.get("val"),
                       replace(base_cfg, lr=lr))
        report.rmse_test = (evaluate_rmse(model, splits["test"], base_cfg.eval_batch)
                            if splits.get("test") else None)
        rows.append(report_row(report, method="fusion", dataset=dataset,
                               mode=mode, lr=lr))
    return rows


def report_row(report: EvalReport, method: str, dataset: str, mode: str,
               lr: float | None) -> dict:
    return {
        "method": method,
        "dataset": dataset,
        "modality_mode": mode,
        "lr": lr,
        "rmse_train": report.rmse_train,
        "rmse_val": report.rmse_val,
        "rmse_test": report.rmse_test,
        "epochs": report.epochs_run,
        "seconds": round(report.seconds, 3),
    }
