"""Training loop and RMSE evaluation for the fusion model.

Loss is cross-entropy over the five rating classes; RMSE is computed on the
expectation-decoded predictions. Mini-batch Adam, shuffled with a dedicated
seeded generator, early stopping on validation RMSE with the best-validation
parameters restored at the end. Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..data.movielens import RatingRecord
from ..errors import ConfigError, DataError, NumericError
from ..fusion.model import FusionModel, predict_rating
from ..tensor import Adam, Tape, Tensor

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 5e-4
    batch_size: int = 64
    epochs: int = 30
    seed: int = 42
    patience: int = 3  # epochs of no validation improvement before stopping
    eval_batch: int = 512
    report_train_rmse: bool = True
    max_train_batches: int | None = None  # cap per epoch, for smoke runs

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be > 0, got {self.lr}")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be >= 1")


@dataclass
class EvalReport:
    rmse_train: float | None = None
    rmse_val: float | None = None
    rmse_test: float | None = None
    loss_curve: list[float] = field(default_factory=list)
    val_curve: list[float] = field(default_factory=list)
    epochs_run: int = 0
    seconds: float = 0.0


def cross_entropy(tape: Tape, probs: Tensor, ratings: np.ndarray) -> Tensor:
    """Mean of -log p(true class); probabilities floored at 1e-12."""
    ratings = np.asarray(ratings)
    if ratings.min() < 1 or ratings.max() > 5:
        raise DataError(f"ratings outside [1, 5]: [{ratings.min()}, {ratings.max()}]")
    picked = tape.pick_per_row(probs, ratings - 1)
    return tape.scale(tape.mean_all(tape.log(tape.clamp_min(picked, PROB_FLOOR))), -1.0)


def record_arrays(records: list[RatingRecord]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    users = np.fromiter((r.user_id for r in records), dtype=np.int64, count=len(records))
    movies = np.fromiter((r.movie_id for r in records), dtype=np.int64, count=len(records))
    ratings = np.fromiter((r.rating for r in records), dtype=np.int64, count=len(records))
    return users, movies, ratings


def evaluate_rmse(model: FusionModel, records: list[RatingRecord],
                  eval_batch: int = 512, argmax: bool = False) -> float:
    """sqrt(mean((y - yhat)^2)) with expectation-decoded predictions."""
    if not records:
        raise DataError("cannot evaluate on an empty split")
    users, movies, ratings = record_arrays(records)
    sq_sum = 0.0
    for lo in range(0, len(records), eval_batch):
        hi = min(lo + eval_batch, len(records))
        preds = model.predict(users[lo:hi], movies[lo:hi], argmax=argmax)
        sq_sum += float(np.sum((ratings[lo:hi] - preds) ** 2))
    return float(np.sqrt(sq_sum / len(records)))


def train(model: FusionModel, train_records: list[RatingRecord],
          val_records: list[RatingRecord] | None, cfg: TrainConfig) -> EvalReport:
    """Fit in place; returns the report with curves and post-training RMSEs."""
    if not train_records:
        raise DataError("empty training split")
    started = time.time()
    users, movies, ratings = record_arrays(train_records)
    params = model.param_list()
    opt = Adam(params, lr=cfg.lr)
    shuffle_rng = np.random.default_rng(cfg.seed)
    dropout_rng = np.random.default_rng(cfg.seed + 1)

    report = EvalReport()
    best_val = np.inf
    best_state: dict[str, np.ndarray] | None = None
    stale = 0

    for epoch in range(cfg.epochs):
        perm = shuffle_rng.permutation(len(train_records))
        loss_sum, seen = 0.0, 0
        n_batches = 0
        for lo in range(0, len(perm), cfg.batch_size):
            if cfg.max_train_batches is not None and n_batches >= cfg.max_train_batches:
                break
            idx = perm[lo:lo + cfg.batch_size]
            tape = Tape()
            probs = model.forward_batch(tape, users[idx], movies[idx],
                                        train=True, rng=dropout_rng)
            loss = cross_entropy(tape, probs, ratings[idx])
            if not np.isfinite(loss.item()):
                raise NumericError(
                    f"non-finite loss at epoch {epoch + 1}, batch {n_batches} "
                    f"(lr={cfg.lr}); lower the learning rate")
            opt.zero_grad()
            tape.backward(loss)
            opt.step()
            loss_sum += loss.item() * len(idx)
            seen += len(idx)
            n_batches += 1
        report.loss_curve.append(loss_sum / max(seen, 1))
        report.epochs_run = epoch + 1

        if val_records:
            val_rmse = evaluate_rmse(model, val_records, cfg.eval_batch)
            report.val_curve.append(val_rmse)
            if val_rmse < best_val - 1e-6:
                best_val = val_rmse
                best_state = {n: t.data.copy() for n, t in model.params().items()}
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break

    if best_state is not None:
        for name, t in model.params().items():
            t.data[...] = best_state[name]
        report.rmse_val = best_val
    if cfg.report_train_rmse:
        report.rmse_train = evaluate_rmse(model, train_records, cfg.eval_batch)
    report.seconds = time.time() - started
    return report
