"""Service-side orchestration: each endpoint body lives here, HTTP-free.

All paths in requests refer to the service's filesystem. Every run writes its
config (key=value with a version string) next to its outputs, and result rows
append to out_dir/results.csv in the shared schema.
"""

from __future__ import annotations

from pathlib import Path

from ..baselines import run_baseline
from ..data import (compute_stats, parse_movies, parse_ratings, parse_users,
                    assign_splits, read_manifest, split_dataset, write_manifest)
from ..data.movielens import ML100K, ML1M
from ..errors import ConfigError, DataError
from ..features import FeatureTables, load_store
from ..fusion import FusionModel, ModelConfig
from ..train import (TrainConfig, append_results, evaluate_rmse, lr_sweep,
                     report_row, train, write_run_config)
from . import schemas

RATING_FILES = {ML100K: "u.data", ML1M: "ratings.dat"}
USER_FILES = {ML100K: "u.user", ML1M: "users.dat"}
MOVIE_FILES = {ML100K: "u.item", ML1M: "movies.dat"}


def _check_fmt(fmt: str) -> str:
    if fmt not in RATING_FILES:
        raise ConfigError(f"unknown dataset format {fmt!r}; use ml100k or ml1m")
    return fmt


def load_raw(dataset_dir: str | Path, fmt: str):
    _check_fmt(fmt)
    base = Path(dataset_dir)
    records = parse_ratings(base / RATING_FILES[fmt], fmt)
    users = parse_users(base / USER_FILES[fmt], fmt)
    movies = parse_movies(base / MOVIE_FILES[fmt], fmt)
    return records, users, movies


def do_ingest(req: schemas.IngestRequest) -> schemas.IngestResponse:
    records, users, movies = load_raw(req.dataset_dir, req.fmt)
    stats = compute_stats(records, n_users=len(users), n_items=len(movies))
    out = Path(req.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    labels = assign_splits(len(records), tuple(req.ratios), req.seed)
    manifest_path = out / "splits.manifest"
    write_manifest(manifest_path, records, labels)
    (out / "stats.txt").write_text(stats.render_block() + "\n", encoding="utf-8")
    write_run_config(out / "ingest.config", {
        "command": "ingest", "dataset_dir": req.dataset_dir, "fmt": req.fmt,
        "ratios": ",".join(str(r) for r in req.ratios), "seed": req.seed,
    })
    sizes = {"train": int((labels == 0).sum()), "val": int((labels == 1).sum()),
             "test": int((labels == 2).sum())}
    return schemas.IngestResponse(
        stats=schemas.StatsBlock(
            n_users=stats.n_users, n_items=stats.n_items,
            n_ratings=stats.n_ratings,
            sparsity_percent=round(stats.sparsity * 100, 3),
            note=stats.sparsity_note()),
        manifest_path=str(manifest_path), split_sizes=sizes)


def _load_stores(paths: schemas.StorePaths, mode: str) -> dict:
    if mode not in ("single", "cross"):
        raise ConfigError(f"mode must be single or cross, got {mode!r}")
    stores = {}
    wanted = ("title", "intro", "poster") if mode == "cross" else ("title", "intro")
    for modality in wanted:
        path = getattr(paths, modality)
        if path is None:
            if mode == "cross" and modality == "poster":
                raise ConfigError("cross mode requires a poster store path")
            continue
        stores[modality] = load_store(path)
    return stores


def build_model(dataset_dir: str, fmt: str, mode: str,
                stores: schemas.StorePaths, settings: schemas.ModelSettings,
                ) -> tuple[FusionModel, FeatureTables]:
    _, users, movies = load_raw(dataset_dir, fmt)
    tables = FeatureTables(users, movies, fmt, zip_buckets=settings.zip_buckets)
    cfg = ModelConfig(mode=mode, **settings.model_dump())
    model = FusionModel(tables, _load_stores(stores, mode), cfg)
    return model, tables


def _splits_from_manifest(manifest: str, limit: int | None = None) -> dict:
    splits = read_manifest(manifest)
    if limit is not None:
        if limit < 1:
            raise ConfigError(f"limit must be >= 1, got {limit}")
        splits["train"] = splits["train"][:limit]
    return splits


def _train_config(t: schemas.TrainerSettings) -> TrainConfig:
    return TrainConfig(lr=t.lr, batch_size=t.batch_size, epochs=t.epochs,
                       seed=t.seed, patience=t.patience,
                       report_train_rmse=t.report_train_rmse,
                       max_train_batches=t.max_train_batches)


def _run_config_values(req: schemas.TrainRequest, command: str) -> dict:
    values = {"command": command, "dataset_dir": req.dataset_dir, "fmt": req.fmt,
              "manifest": req.manifest, "mode": req.mode,
              "dataset_name": req.dataset_name}
    for key, value in req.model.model_dump().items():
        values[f"model.{key}"] = value
    for key, value in req.trainer.model_dump().items():
        values[f"trainer.{key}"] = value
    for key, value in req.stores.model_dump().items():
        values[f"stores.{key}"] = value or ""
    return values


def _report_block(report) -> schemas.ReportBlock:
    return schemas.ReportBlock(
        rmse_train=report.rmse_train, rmse_val=report.rmse_val,
        rmse_test=report.rmse_test, epochs=report.epochs_run,
        seconds=round(report.seconds, 3),
        loss_curve=[round(x, 6) for x in report.loss_curve],
        val_curve=[round(x, 6) for x in report.val_curve])


def do_train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    out = Path(req.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    splits = _splits_from_manifest(req.manifest, req.trainer.limit)
    if not splits["train"]:
        raise DataError("manifest has no train records")
    model, _ = build_model(req.dataset_dir, req.fmt, req.mode, req.stores,
                           req.model)
    report = train(model, splits["train"], splits["val"] or None,
                   _train_config(req.trainer))
    if splits["test"]:
        report.rmse_test = evaluate_rmse(model, splits["test"])
    checkpoint = out / "fusion.frwt"
    model.save(checkpoint)
    write_run_config(out / "train.config", _run_config_values(req, "train"))
    results = out / "results.csv"
    append_results(results, [report_row(report, method="fusion",
                                        dataset=req.dataset_name,
                                        mode=req.mode, lr=req.trainer.lr)])
    return schemas.TrainResponse(checkpoint_path=str(checkpoint),
                                 results_path=str(results),
                                 report=_report_block(report))


def do_eval(req: schemas.EvalRequest) -> schemas.EvalResponse:
    splits = _splits_from_manifest(req.manifest)
    if req.split not in splits:
        raise ConfigError(f"unknown split {req.split!r}")
    records = splits[req.split]
    if not records:
        raise DataError(f"split {req.split!r} is empty")
    model, _ = build_model(req.dataset_dir, req.fmt, req.mode, req.stores,
                           req.model)
    model.load(req.checkpoint)
    rmse = evaluate_rmse(model, records)
    if req.out_dir:
        out = Path(req.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        append_results(out / "results.csv", [{
            "method": "fusion-eval", "dataset": req.dataset_name,
            "modality_mode": req.mode, "lr": None, "rmse_train": None,
            "rmse_val": None, "rmse_test": rmse, "epochs": 0, "seconds": 0.0,
        }])
    return schemas.EvalResponse(split=req.split, n_records=len(records),
                                rmse=rmse)


def do_baseline(req: schemas.BaselineRequest) -> schemas.BaselineResponse:
    splits = _splits_from_manifest(req.manifest)
    if not splits["test"]:
        raise DataError("manifest has no test records")
    row = run_baseline(req.method, splits["train"], splits["test"],
                       k=req.k_neighbors, svd_factors=req.svd_factors,
                       svd_lr=req.svd_lr, svd_reg=req.svd_reg,
                       svd_epochs=req.svd_epochs, seed=req.seed)
    row["dataset"] = req.dataset_name
    results_path = None
    if req.out_dir:
        out = Path(req.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        results_path = out / "results.csv"
        append_results(results_path, [row])
        write_run_config(out / f"baseline-{req.method}.config", {
            "command": "baseline", "method": req.method,
            "manifest": req.manifest, "k_neighbors": req.k_neighbors,
            "svd_factors": req.svd_factors, "svd_lr": req.svd_lr,
            "svd_reg": req.svd_reg, "svd_epochs": req.svd_epochs,
            "seed": req.seed,
        })
    return schemas.BaselineResponse(
        rows=[schemas.ResultRow(**row)],
        results_path=str(results_path) if results_path else None)


def do_sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    if not req.lrs:
        raise ConfigError("sweep needs at least one learning rate")
    out = Path(req.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    splits = _splits_from_manifest(req.manifest, req.trainer.limit)
    _, users, movies = load_raw(req.dataset_dir, req.fmt)
    tables = FeatureTables(users, movies, req.fmt,
                           zip_buckets=req.model.zip_buckets)
    stores = _load_stores(req.stores, req.mode)
    cfg = ModelConfig(mode=req.mode, **req.model.model_dump())

    def make_model() -> FusionModel:
        return FusionModel(tables, stores, cfg)

    rows = lr_sweep(make_model, splits, _train_config(req.trainer),
                    lrs=tuple(req.lrs), dataset=req.dataset_name, mode=req.mode)
    values = _run_config_values(req, "sweep")
    values["lrs"] = ",".join(str(lr) for lr in req.lrs)
    write_run_config(out / "sweep.config", values)
    results = out / "results.csv"
    append_results(results, rows)
    return schemas.SweepResponse(rows=[schemas.ResultRow(**r) for r in rows],
                                 results_path=str(results))
