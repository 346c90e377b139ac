"""CLI behavior: output, exit codes, config-file defaults, determinism."""

import pytest

from fusionrec.cli import main
from fusionrec.data.synthetic import SyntheticSpec, generate_ml100k
from fusionrec.train import write_run_config

TINY_FLAGS = ["--d", "16", "--up-hidden", "8", "--id-dim", "4",
              "--zip-buckets", "7", "--layers", "1", "--heads", "2",
              "--ffn", "32", "--init-seed", "11", "--dtype", "float32"]


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    generate_ml100k(root, SyntheticSpec(n_users=30, n_items=40, n_ratings=600,
                                        min_per_user=10, seed=5))
    return root


def tiny_train_args(corpus, manifest, out, extra=()):
    return (["train", "--data", str(corpus), "--manifest", str(manifest),
             "--out", str(out), "--mode", "single", "--lr", "0.002",
             "--epochs", "1"] + TINY_FLAGS + list(extra))


@pytest.fixture(scope="module")
def ingested(corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("ingest")
    code = main(["ingest", "--data", str(corpus), "--out", str(out),
                 "--seed", "21"])
    assert code == 0
    return out


class TestIngest:
    def test_prints_stats_block(self, corpus, tmp_path, capsys):
        code = main(["ingest", "--data", str(corpus), "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "Dataset statistics" in out
        assert "Users     30" in out
        assert "Sparsity" in out

    def test_missing_file_exits_3(self, tmp_path, capsys):
        code = main(["ingest", "--data", str(tmp_path / "void"),
                     "--out", str(tmp_path)])
        assert code == 3
        assert "u.data" in capsys.readouterr().err

    def test_rerun_same_seed_identical_manifest(self, corpus, ingested,
                                                tmp_path):
        code = main(["ingest", "--data", str(corpus), "--out", str(tmp_path),
                     "--seed", "21"])
        assert code == 0
        assert (tmp_path / "splits.manifest").read_bytes() == \
            (ingested / "splits.manifest").read_bytes()


class TestTrainEval:
    def test_train_eval_flow(self, corpus, ingested, tmp_path, capsys):
        manifest = ingested / "splits.manifest"
        code = main(tiny_train_args(corpus, manifest, tmp_path))
        out = capsys.readouterr().out
        assert code == 0
        assert "rmse_test" in out and "checkpoint" in out

        code = main(["eval", "--data", str(corpus), "--manifest", str(manifest),
                     "--checkpoint", str(tmp_path / "fusion.frwt"),
                     "--split", "val", "--mode", "single"] + TINY_FLAGS)
        out = capsys.readouterr().out
        assert code == 0
        assert "RMSE (val" in out

    def test_eval_missing_checkpoint_exits_3(self, corpus, ingested, tmp_path,
                                             capsys):
        code = main(["eval", "--data", str(corpus),
                     "--manifest", str(ingested / "splits.manifest"),
                     "--checkpoint", str(tmp_path / "none.frwt"),
                     "--mode", "single"] + TINY_FLAGS)
        assert code == 3
        assert "checkpoint" in capsys.readouterr().err

    def test_config_file_supplies_defaults(self, corpus, ingested, tmp_path,
                                           capsys):
        cfg_path = tmp_path / "run.config"
        write_run_config(cfg_path, {"epochs": 1, "lr": 0.002, "mode": "single",
                                    "d": 16, "up_hidden": 8, "id_dim": 4,
                                    "zip_buckets": 7, "n_layers": 1,
                                    "n_heads": 2, "ffn_dim": 32,
                                    "dtype": "float32"})
        code = main(["--config", str(cfg_path), "train",
                     "--data", str(corpus),
                     "--manifest", str(ingested / "splits.manifest"),
                     "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "epochs      1" in out

    def test_broken_config_exits_2(self, corpus, tmp_path, capsys):
        bad = tmp_path / "bad.config"
        bad.write_text("no equals sign here\n")
        code = main(["--config", str(bad), "ingest", "--data", str(corpus),
                     "--out", str(tmp_path)])
        assert code == 2


class TestBaselineAndSweep:
    def test_baseline_global_mean(self, ingested, capsys):
        code = main(["baseline", "--manifest", str(ingested / "splits.manifest"),
                     "--method", "global_mean", "--dataset-name", "tiny"])
        out = capsys.readouterr().out
        assert code == 0
        assert "global_mean" in out

    def test_sweep_emits_rows(self, corpus, ingested, tmp_path, capsys):
        manifest = ingested / "splits.manifest"
        code = main(["sweep", "--data", str(corpus), "--manifest", str(manifest),
                     "--out", str(tmp_path), "--mode", "single",
                     "--epochs", "1", "--lrs", "0.002,0.0005"] + TINY_FLAGS)
        out = capsys.readouterr().out
        assert code == 0
        assert out.count("fusion") == 2
        results = (tmp_path / "results.csv").read_text().splitlines()
        assert len(results) == 3  # header + two rows
