"""Request and response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class StatsBlock(BaseModel):
    n_users: int
    n_items: int
    n_ratings: int
    sparsity_percent: float
    note: str | None = None


class IngestRequest(BaseModel):
    dataset_dir: str
    fmt: str = "ml100k"
    out_dir: str
    ratios: tuple[float, float, float] = (0.9, 0.05, 0.05)
    seed: int = Field(default=20240901, description="split shuffle seed")


class IngestResponse(BaseModel):
    stats: StatsBlock
    manifest_path: str
    split_sizes: dict[str, int]


class ModelSettings(BaseModel):
    d: int = 768
    up_hidden: int = 256
    id_dim: int = 64
    zip_buckets: int = 1000
    n_layers: int = 2
    n_heads: int = 8
    ffn_dim: int = 1024
    dropout: float = 0.1
    init_seed: int = 1234
    dtype: str = "float32"


class TrainerSettings(BaseModel):
    lr: float = 5e-4
    batch_size: int = 64
    epochs: int = 30
    seed: int = 42
    patience: int = 3
    report_train_rmse: bool = True
    max_train_batches: int | None = None
    limit: int | None = Field(default=None,
                              description="cap on manifest records, smoke runs only")


class StorePaths(BaseModel):
    title: str | None = None
    intro: str | None = None
    poster: str | None = None


class TrainRequest(BaseModel):
    dataset_dir: str
    fmt: str = "ml100k"
    manifest: str
    out_dir: str
    mode: str = "cross"  # single excludes the poster modality
    dataset_name: str = "ml100k"
    stores: StorePaths = StorePaths()
    model: ModelSettings = ModelSettings()
    trainer: TrainerSettings = TrainerSettings()


class ReportBlock(BaseModel):
    rmse_train: float | None
    rmse_val: float | None
    rmse_test: float | None
    epochs: int
    seconds: float
    loss_curve: list[float]
    val_curve: list[float]


class TrainResponse(BaseModel):
    checkpoint_path: str
    results_path: str
    report: ReportBlock


class EvalRequest(BaseModel):
    dataset_dir: str
    fmt: str = "ml100k"
    manifest: str
    checkpoint: str
    split: str = "test"
    mode: str = "cross"
    stores: StorePaths = StorePaths()
    model: ModelSettings = ModelSettings()
    out_dir: str | None = None
    dataset_name: str = "ml100k"


class EvalResponse(BaseModel):
    split: str
    n_records: int
    rmse: float


class BaselineRequest(BaseModel):
    manifest: str
    method: str
    dataset_name: str = "ml100k"
    out_dir: str | None = None
    k_neighbors: int = 40
    svd_factors: int = 50
    svd_lr: float = 0.005
    svd_reg: float = 0.02
    svd_epochs: int = 30
    seed: int = 7


class ResultRow(BaseModel):
    method: str
    dataset: str
    modality_mode: str
    lr: float | None
    rmse_train: float | None
    rmse_val: float | None
    rmse_test: float | None
    epochs: int
    seconds: float


class BaselineResponse(BaseModel):
    rows: list[ResultRow]
    results_path: str | None = None


class SweepRequest(TrainRequest):
    lrs: tuple[float, ...] = (0.001, 0.0005, 0.0001)


class SweepResponse(BaseModel):
    rows: list[ResultRow]
    results_path: str


class ErrorBody(BaseModel):
    code: str  # config | data | numeric
    message: str
