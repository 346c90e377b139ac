"""Command-line client for the fusionrec service.

Every data-touching command is a thin HTTP call: by default the service app
is mounted in-process, and --server targets a running instance instead. A
flat key=value config file (--config) supplies defaults; explicit flags win.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

from . import __version__
from .threads import apply_thread_cap

EXIT_BY_CODE = {"config": 2, "data": 3, "numeric": 4}
MODEL_KEYS = ("d", "up_hidden", "id_dim", "zip_buckets", "n_layers", "n_heads",
              "ffn_dim", "dropout", "init_seed", "dtype")
TRAINER_KEYS = ("lr", "batch_size", "epochs", "seed", "patience",
                "report_train_rmse", "max_train_batches", "limit")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, default=768, help="token width")
    p.add_argument("--up-hidden", dest="up_hidden", type=int, default=256)
    p.add_argument("--id-dim", dest="id_dim", type=int, default=64)
    p.add_argument("--zip-buckets", dest="zip_buckets", type=int, default=1000)
    p.add_argument("--layers", dest="n_layers", type=int, default=2)
    p.add_argument("--heads", dest="n_heads", type=int, default=8)
    p.add_argument("--ffn", dest="ffn_dim", type=int, default=1024)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--init-seed", type=int, default=1234)
    p.add_argument("--dtype", default="float32", choices=("float32", "float64"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusionrec",
        description="Multi-modal movie rating prediction: ingestion, training, "
                    "evaluation, baselines, and the learning-rate sweep.")
    parser.add_argument("--version", action="version",
                        version=f"fusionrec {__version__}")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs "
                             "the service in-process")
    parser.add_argument("--config", default=None,
                        help="key=value config file with defaults for flags")
    parser.add_argument("--json", action="store_true",
                        help="print raw JSON responses")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a raw MovieLens directory, write "
                                      "the split manifest and stats")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--fmt", default="ml100k", choices=("ml100k", "ml1m"))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=20240901)
    p.add_argument("--ratios", default="0.9,0.05,0.05",
                   help="train,val,test fractions")

    for name, desc in (("train", "train the fusion model from a manifest"),
                       ("sweep", "train once per learning rate and emit the "
                                 "results table")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--data", required=True)
        p.add_argument("--fmt", default="ml100k", choices=("ml100k", "ml1m"))
        p.add_argument("--manifest", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--mode", default="cross", choices=("single", "cross"))
        p.add_argument("--dataset-name", default=None,
                       help="label used in the results table (default: fmt)")
        p.add_argument("--title", default=None, help="title store (.mmeb)")
        p.add_argument("--intro", default=None, help="introduction store")
        p.add_argument("--poster", default=None, help="poster store")
        p.add_argument("--lr", type=float, default=5e-4)
        p.add_argument("--batch-size", type=int, default=64)
        p.add_argument("--epochs", type=int, default=30)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--patience", type=int, default=3)
        p.add_argument("--limit", type=int, default=None,
                       help="cap train records (smoke runs)")
        p.add_argument("--max-train-batches", type=int, default=None)
        p.add_argument("--no-train-rmse", action="store_true",
                       help="skip the post-training pass over the train split")
        _add_model_flags(p)
        if name == "sweep":
            p.add_argument("--lrs", default="0.001,0.0005,0.0001",
                           help="comma-separated learning rates")

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    p.add_argument("--data", required=True)
    p.add_argument("--fmt", default="ml100k", choices=("ml100k", "ml1m"))
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--mode", default="cross", choices=("single", "cross"))
    p.add_argument("--dataset-name", default=None)
    p.add_argument("--title", default=None)
    p.add_argument("--intro", default=None)
    p.add_argument("--poster", default=None)
    p.add_argument("--out", default=None)
    _add_model_flags(p)

    p = sub.add_parser("baseline", help="run a traditional baseline")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", required=True,
                   choices=("user_cf", "item_cf", "svd", "global_mean"))
    p.add_argument("--dataset-name", default="ml100k")
    p.add_argument("--out", default=None)
    p.add_argument("--k", type=int, default=40, help="neighborhood size")
    p.add_argument("--svd-factors", type=int, default=50)
    p.add_argument("--svd-lr", type=float, default=0.005)
    p.add_argument("--svd-reg", type=float, default=0.02)
    p.add_argument("--svd-epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=7)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8351)

    p = sub.add_parser("synth", help="generate an ml-100k-layout demo corpus "
                                     "with seeded embedding stores")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    return parser


def _apply_config_defaults(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    if "--config" not in argv:
        return
    from .train.results import read_run_config
    path = argv[argv.index("--config") + 1]
    values = read_run_config(path)
    values.pop("schema_version", None)
    values.pop("version", None)
    converted = {}
    for key, raw in values.items():
        if raw.lower() in ("true", "false"):
            converted[key] = raw.lower() == "true"
        else:
            try:
                converted[key] = int(raw)
            except ValueError:
                try:
                    converted[key] = float(raw)
                except ValueError:
                    converted[key] = raw
    parser.set_defaults(**converted)
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        for sub in action.choices.values():
            sub.set_defaults(**converted)


def make_client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # in-process mode: the sync ASGI bridge drives the service app directly
    from starlette.testclient import TestClient

    from .service.app import app  # imported lazily, after the thread cap
    return TestClient(app, raise_server_exceptions=False)


def post(args, path: str, payload: dict) -> tuple[int, dict]:
    """POST and normalize errors to (exit_code, body)."""
    try:
        with make_client(args.server) as client:
            resp = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return 2, {}
    if resp.status_code == 422:
        print(f"error: invalid request: {resp.text}", file=sys.stderr)
        return 2, {}
    body = resp.json()
    if resp.status_code >= 400:
        err = body.get("error", {})
        print(f"error ({err.get('code', '?')}): {err.get('message', resp.text)}",
              file=sys.stderr)
        return EXIT_BY_CODE.get(err.get("code"), 4), {}
    if args.json:
        print(json.dumps(body, indent=2))
    return 0, body


def _model_payload(args) -> dict:
    return {key: getattr(args, key) for key in MODEL_KEYS if hasattr(args, key)}


def _trainer_payload(args) -> dict:
    out = {key: getattr(args, key) for key in TRAINER_KEYS if hasattr(args, key)}
    if getattr(args, "no_train_rmse", False):
        out["report_train_rmse"] = False
    return out


def _stores_payload(args) -> dict:
    return {"title": args.title, "intro": args.intro, "poster": args.poster}


def _print_rows(rows: list[dict]) -> None:
    header = ("method", "dataset", "modality_mode", "lr", "rmse_train",
              "rmse_val", "rmse_test", "epochs", "seconds")
    print("  ".join(f"{h:>13}" for h in header))
    for row in rows:
        print("  ".join(f"{'' if row.get(h) is None else row[h]:>13}"
                        for h in header))


def cmd_ingest(args) -> int:
    code, body = post(args, "/ingest", {
        "dataset_dir": args.data, "fmt": args.fmt, "out_dir": args.out,
        "seed": args.seed,
        "ratios": [float(x) for x in str(args.ratios).split(",")]})
    if code or args.json:
        return code
    stats = body["stats"]
    print("Dataset statistics")
    print(f"  Users     {stats['n_users']}")
    print(f"  Items     {stats['n_items']}")
    print(f"  Ratings   {stats['n_ratings']}")
    print(f"  Sparsity  {stats['sparsity_percent']:.3f}%")
    if stats.get("note"):
        print(f"  Note      {stats['note']}")
    sizes = body["split_sizes"]
    print(f"Splits      {sizes['train']}/{sizes['val']}/{sizes['test']}")
    print(f"Manifest    {body['manifest_path']}")
    return 0


def cmd_train(args) -> int:
    payload = {
        "dataset_dir": args.data, "fmt": args.fmt, "manifest": args.manifest,
        "out_dir": args.out, "mode": args.mode,
        "dataset_name": args.dataset_name or args.fmt,
        "stores": _stores_payload(args), "model": _model_payload(args),
        "trainer": _trainer_payload(args)}
    code, body = post(args, "/train", payload)
    if code or args.json:
        return code
    report = body["report"]
    print(f"epochs      {report['epochs']} ({report['seconds']:.1f}s)")
    for name in ("rmse_train", "rmse_val", "rmse_test"):
        if report[name] is not None:
            print(f"{name:<11} {report[name]:.4f}")
    print(f"checkpoint  {body['checkpoint_path']}")
    print(f"results     {body['results_path']}")
    return 0


def cmd_sweep(args) -> int:
    payload = {
        "dataset_dir": args.data, "fmt": args.fmt, "manifest": args.manifest,
        "out_dir": args.out, "mode": args.mode,
        "dataset_name": args.dataset_name or args.fmt,
        "stores": _stores_payload(args), "model": _model_payload(args),
        "trainer": _trainer_payload(args),
        "lrs": [float(x) for x in str(args.lrs).split(",")]}
    code, body = post(args, "/sweep", payload)
    if code or args.json:
        return code
    _print_rows(body["rows"])
    print(f"results     {body['results_path']}")
    return 0


def cmd_eval(args) -> int:
    payload = {
        "dataset_dir": args.data, "fmt": args.fmt, "manifest": args.manifest,
        "checkpoint": args.checkpoint, "split": args.split, "mode": args.mode,
        "dataset_name": args.dataset_name or args.fmt,
        "stores": _stores_payload(args), "model": _model_payload(args),
        "out_dir": args.out}
    code, body = post(args, "/eval", payload)
    if code or args.json:
        return code
    print(f"RMSE ({body['split']}, n={body['n_records']}): {body['rmse']:.4f}")
    return 0


def cmd_baseline(args) -> int:
    code, body = post(args, "/baseline", {
        "manifest": args.manifest, "method": args.method,
        "dataset_name": args.dataset_name, "out_dir": args.out,
        "k_neighbors": args.k, "svd_factors": args.svd_factors,
        "svd_lr": args.svd_lr, "svd_reg": args.svd_reg,
        "svd_epochs": args.svd_epochs, "seed": args.seed})
    if code or args.json:
        return code
    _print_rows(body["rows"])
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("fusionrec.service.app:app", host=args.host, port=args.port)
    return 0


def cmd_synth(args) -> int:
    from .data.synthetic import SyntheticSpec, generate_ml100k

    generate_ml100k(args.out, SyntheticSpec(seed=args.seed))
    print(f"wrote ml-100k-layout corpus and title/intro/poster stores to {args.out}")
    return 0


COMMANDS = {"ingest": cmd_ingest, "train": cmd_train, "sweep": cmd_sweep,
            "eval": cmd_eval, "baseline": cmd_baseline, "serve": cmd_serve,
            "synth": cmd_synth}


def main(argv: list[str] | None = None) -> int:
    apply_thread_cap()
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_defaults(parser, argv)
    except Exception as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
