"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. The corpus is generated in
the official ml-100k layout with the standard release's marginals (943 users,
1682 movies, 100k ratings) and planted preference structure, since the real
download is not redistributable here; with a real ml-100k directory the same
commands run unchanged. Seeded stores stand in for the three modality
embeddings.

A5 trains the full-size model on the 90k train split and dominates the
suite's runtime (tens of minutes on a 2-core box).
"""

import math
import time

import numpy as np
import pytest
from starlette.testclient import TestClient

from cf_oracle import oracle_item_cf, oracle_user_cf
from fusionrec.baselines import NeighborModel, RatingsMatrix, run_baseline
from fusionrec.data import parse_movies, parse_ratings, parse_users, read_manifest
from fusionrec.data.synthetic import generate_ml100k
from fusionrec.errors import DataError
from fusionrec.features import EmbeddingStore, FeatureTables, load_store
from fusionrec.fusion import (FusionModel, ModelConfig, encoder_forward,
                              extract_cls, positional_encoding)
from fusionrec.service.app import create_app
from fusionrec.tensor import Tape, Tensor, grad_check
from fusionrec.train import TrainConfig, cross_entropy, evaluate_rmse, train
from test_baselines import dense_records

pytestmark = pytest.mark.filterwarnings("ignore::DeprecationWarning")


def ok(tag: str, message: str) -> None:
    print(f"\n[{tag}] PASS — {message}")


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("ml100k")
    generate_ml100k(root)  # defaults: 943 users, 1682 movies, 100000 ratings
    return root


@pytest.fixture(scope="session")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


@pytest.fixture(scope="session")
def ingested(client, corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("ingest")
    started = time.time()
    resp = client.post("/ingest", json={
        "dataset_dir": str(corpus), "fmt": "ml100k", "out_dir": str(out)})
    assert resp.status_code == 200, resp.text
    return out, resp.json(), time.time() - started


@pytest.fixture(scope="session")
def dataset(corpus):
    records = parse_ratings(corpus / "u.data", "ml100k")
    users = parse_users(corpus / "u.user", "ml100k")
    movies = parse_movies(corpus / "u.item", "ml100k")
    tables = FeatureTables(users, movies, "ml100k")
    return records, users, movies, tables


@pytest.fixture(scope="session")
def splits(ingested):
    out, body, _ = ingested
    return read_manifest(body["manifest_path"])


def test_a1_dataset_fidelity(ingested):
    _, body, seconds = ingested
    stats = body["stats"]
    assert stats["n_users"] == 943
    assert stats["n_items"] == 1682
    assert stats["n_ratings"] == 100_000
    assert stats["sparsity_percent"] == pytest.approx(93.695, abs=5e-4)
    assert body["split_sizes"] == {"train": 90_000, "val": 5_000, "test": 5_000}
    assert seconds < 10.0
    ok("A1", f"943/1682/100000, sparsity 93.695%, splits 90000/5000/5000 "
             f"in {seconds:.1f}s")


def _tiny_fusion_model(mode="cross"):
    from test_features import small_tables
    rng = np.random.default_rng(77)
    stores = {m: EmbeddingStore(m, dim=8,
                                vectors={i: rng.standard_normal(8)
                                         for i in range(1, 6)}, init_seed=4)
              for m in ("title", "intro", "poster")}
    cfg = ModelConfig(d=8, up_hidden=4, id_dim=3, zip_buckets=11, n_layers=1,
                      n_heads=2, ffn_dim=16, dropout=0.0, mode=mode,
                      init_seed=5, dtype="float64")
    return FusionModel(small_tables(), stores, cfg)


def test_a2_numerical_core(dataset):
    started = time.time()
    rng = np.random.default_rng(0)

    def tensors():
        a = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        b = Tensor(rng.standard_normal((4, 2)), requires_grad=True)
        c = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        return a, b, c

    worst = 0.0
    a, b, c = tensors()
    bias = Tensor(rng.standard_normal((1, 4)), requires_grad=True)
    gain = Tensor(1.0 + 0.1 * rng.standard_normal((1, 4)), requires_grad=True)
    pos = Tensor(rng.random((3, 4)) + 0.5, requires_grad=True)
    cases = [
        (lambda t: t.sum_all(t.mul(y := t.matmul(a, b), y)), [a, b]),
        (lambda t: t.sum_all(t.mul(y := t.add(a, c), y)), [a, c]),
        (lambda t: t.sum_all(t.mul(y := t.add(a, bias), y)), [a, bias]),
        (lambda t: t.sum_all(t.mul(y := t.scale(a, -2.5), y)), [a]),
        (lambda t: t.sum_all(t.mul(y := t.relu(a), y)), [a]),
        (lambda t: t.sum_all(t.mul(t.softmax_rows(a), t.relu(c))), [a]),
        (lambda t: t.sum_all(t.mul(y := t.layer_norm(a, gain, bias), y)),
         [a, gain, bias]),
        (lambda t: t.sum_all(t.mul(y := t.concat_cols([a, c]), y)), [a, c]),
        (lambda t: t.sum_all(t.mul(y := t.slice_cols(a, 1, 3), y)), [a]),
        (lambda t: t.sum_all(t.mul(y := t.slice_rows(a, 0, 2), y)), [a]),
        (lambda t: t.sum_all(t.mul(y := t.transpose(b), y)), [b]),
        (lambda t: t.sum_all(t.mul(y := t.gather_rows(a, np.array([0, 2, 1, 2])), y)), [a]),
        (lambda t: t.sum_all(t.mul(y := t.interleave_rows([a, c]), y)), [a, c]),
        (lambda t: t.sum_all(t.mul(y := t.take_every(t.interleave_rows([a, c]), 2, 0), y)), [a, c]),
        (lambda t: t.sum_all(t.mul(y := t.pick_per_row(a, np.array([0, 3, 1])), y)), [a]),
        (lambda t: t.mean_all(t.mul(a, a)), [a]),
        (lambda t: t.sum_all(t.log(pos)), [pos]),
        (lambda t: t.sum_all(t.mul(y := t.clamp_min(a, 0.05), y)), [a]),
        (lambda t: t.scale(t.mean_all(t.softmax_rows(t.matmul(a, b))), -1.0), [a, b]),
    ]
    for f, params in cases:
        worst = max(worst, grad_check(f, params))
    assert worst < 1e-4, f"op gradient check failed: {worst}"

    # full tiny-config model, fused-batch path and per-record reference path
    model = _tiny_fusion_model()
    users = np.array([1, 4])
    movies = np.array([2, 6])
    labels = np.array([2, 5])

    def batch_loss(t):
        return cross_entropy(t, model.forward_batch(t, users, movies), labels)

    def single_loss(t):
        return cross_entropy(t, model.forward_single(t, 3, 7), np.array([4]))

    model_worst = max(grad_check(batch_loss, model.param_list()),
                      grad_check(single_loss, model.param_list()))
    assert model_worst < 1e-4, f"full-model gradient check failed: {model_worst}"
    seconds = time.time() - started
    assert seconds < 60.0
    ok("A2", f"op gradients <= {worst:.2e}, full tiny model <= "
             f"{model_worst:.2e} in {seconds:.1f}s")


def test_a3_fusion_invariants(dataset):
    # position encoding against direct formula evaluation
    d = 768
    p = positional_encoding(12, d)
    rng = np.random.default_rng(3)
    for _ in range(20):
        pos = int(rng.integers(0, 12))
        i = int(rng.integers(0, d // 2))
        angle = pos / 10000.0 ** (2.0 * i / d)
        assert abs(p[pos, 2 * i] - math.sin(angle)) < 1e-12
        assert abs(p[pos, 2 * i + 1] - math.cos(angle)) < 1e-12

    # attention rows stochastic + permutation behavior at the real width
    _, _, _, tables = dataset
    cfg = ModelConfig(mode="single", init_seed=9, dtype="float64", dropout=0.0)
    model = FusionModel(tables, {}, cfg)
    weights: list = []
    tape = Tape(record=False)
    tokens = model.embedder.slot_tokens(tape, np.array([7]), np.array([11]))
    model.forward_tokens(tape, tokens, weights_out=weights)
    for w in weights:
        assert np.all(w >= 0)
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-6)

    unit_tokens = [Tensor(rng.standard_normal((1, d))) for _ in range(10)]

    def cls_of(toks, positions):
        t = Tape(record=False)
        seq = model.build_sequence(t, toks, positions_enabled=positions)
        h = encoder_forward(t, seq, model.layers, model.encoder_cfg, 12,
                            fused=False)
        return extract_cls(t, h).data.copy()

    base_off = cls_of(unit_tokens, False)
    base_on = cls_of(unit_tokens, True)
    broken = 0.0
    for _ in range(4):
        perm = rng.permutation(10)
        permuted = [unit_tokens[i] for i in perm]
        np.testing.assert_allclose(cls_of(permuted, False), base_off, atol=1e-5)
        broken = max(broken, np.abs(cls_of(permuted, True) - base_on).max())
    assert broken > 1e-6
    ok("A3", f"positions match direct formula at 20 pairs; attention rows "
             f"stochastic; permutation invariance holds without positions and "
             f"breaks with them (max delta {broken:.2e})")


def test_a4_overfit_capacity(corpus, dataset):
    records, users, movies, tables = dataset
    stores = {m: load_store(corpus / f"{m}.mmeb") for m in ("title", "intro",
                                                            "poster")}
    toy = records[:10]
    cfg = ModelConfig(mode="single", init_seed=7, dtype="float32", dropout=0.0)
    model = FusionModel(tables, stores, cfg)
    started = time.time()
    report = train(model, toy, None,
                   TrainConfig(lr=2e-3, batch_size=10, epochs=200, seed=3,
                               report_train_rmse=True))
    seconds = time.time() - started
    assert report.rmse_train < 0.3, f"memorization failed: {report.rmse_train}"
    assert seconds < 120.0
    ok("A4", f"train RMSE {report.rmse_train:.4f} after "
             f"{report.epochs_run} epochs in {seconds:.0f}s")


def test_a5_end_to_end_single_modal(corpus, dataset, splits):
    records, users, movies, tables = dataset
    stores = {m: load_store(corpus / f"{m}.mmeb") for m in ("title", "intro",
                                                            "poster")}
    global_mean_row = run_baseline("global_mean", splits["train"], splits["test"])
    global_mean_rmse = global_mean_row["rmse_test"]

    cfg = ModelConfig(mode="single", init_seed=7, dtype="float32")
    model = FusionModel(tables, stores, cfg)
    started = time.time()
    report = train(model, splits["train"], splits["val"],
                   TrainConfig(lr=5e-4, batch_size=64, epochs=2, seed=3,
                               report_train_rmse=False))
    test_rmse = evaluate_rmse(model, splits["test"])
    seconds = time.time() - started
    assert report.epochs_run <= 10
    assert test_rmse <= 1.05, f"test RMSE {test_rmse}"
    assert test_rmse < global_mean_rmse
    assert stores["poster"].access_count == 0
    ok("A5", f"single-modal test RMSE {test_rmse:.4f} <= 1.05 and beats "
             f"global mean {global_mean_rmse:.4f}; {report.epochs_run} epochs "
             f"in {seconds / 60:.1f} min")


def test_a6_baselines(splits):
    # (a) exact agreement with the brute-force oracle on 200 random matrices
    rng = np.random.default_rng(42)
    checked = 0
    for _ in range(200):
        n_u = int(rng.integers(2, 7))
        n_i = int(rng.integers(2, 7))
        records = dense_records(rng.integers(1, 6, (n_u, n_i)))
        matrix = RatingsMatrix(records)
        model = NeighborModel(matrix)
        u = int(rng.integers(1, n_u + 1))
        i = int(rng.integers(1, n_i + 1))
        assert model.predict_user_cf(u, i) == pytest.approx(
            oracle_user_cf(records, u, i), abs=1e-10)
        assert model.predict_item_cf(u, i) == pytest.approx(
            oracle_item_cf(records, u, i), abs=1e-10)
        checked += 1
    assert checked == 200

    # (b) full-scale bands on the corpus; the traditional-baseline figures
    # reported alongside this architecture's original evaluation (2.298-2.812
    # on ML-100K) sit far outside the canonical range for these methods and
    # are recorded as non-reproduced (see README); canonical bands apply here
    rmses = {}
    for method in ("user_cf", "item_cf", "svd", "global_mean"):
        row = run_baseline(method, splits["train"], splits["test"])
        rmses[method] = row["rmse_test"]
    for method in ("user_cf", "item_cf", "svd"):
        assert 0.90 <= rmses[method] <= 1.15, (method, rmses[method])
    assert 1.10 <= rmses["global_mean"] <= 1.15, rmses["global_mean"]
    ok("A6", "oracle agreement on 200 matrices; test RMSE "
             + ", ".join(f"{m}={v:.4f}" for m, v in rmses.items())
             + "; previously reported 2.298-2.812 figures non-reproduced "
               "(canonical range instead)")


def test_a7_sweep_harness(client, corpus, ingested, tmp_path_factory):
    out_a = tmp_path_factory.mktemp("sweep_a")
    out_b = tmp_path_factory.mktemp("sweep_b")
    _, body, _ = ingested
    payload = {
        "dataset_dir": str(corpus), "fmt": "ml100k",
        "manifest": body["manifest_path"], "mode": "single",
        "dataset_name": "ml100k",
        "model": {"dropout": 0.1, "init_seed": 7, "dtype": "float32"},
        "trainer": {"batch_size": 64, "epochs": 1, "seed": 3, "limit": 3200,
                    "report_train_rmse": True},
        "lrs": [0.001, 0.0005, 0.0001],
    }
    rows = []
    for out in (out_a, out_b):
        payload["out_dir"] = str(out)
        resp = client.post("/sweep", json=payload)
        assert resp.status_code == 200, resp.text
        rows.append(resp.json()["rows"])
        csv_lines = (out / "results.csv").read_text().splitlines()
        assert csv_lines[0] == ("method,dataset,modality_mode,lr,rmse_train,"
                                "rmse_val,rmse_test,epochs,seconds")
        assert len(csv_lines) == 4  # header + one complete row per rate

    first, second = rows
    assert [r["lr"] for r in first] == [0.001, 0.0005, 0.0001]
    for row in first:
        assert row["rmse_train"] is not None and row["rmse_test"] is not None
    assert [r["rmse_test"] for r in first] == [r["rmse_test"] for r in second]
    assert [r["rmse_train"] for r in first] == [r["rmse_train"] for r in second]
    ok("A7", "three complete rows for the swept rates, identical across "
             "reruns with the fixed seed")
