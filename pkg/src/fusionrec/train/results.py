"""Machine-readable results table and the flat key=value run-config file.

Fusion runs and baselines share one CSV schema:
method,dataset,modality_mode,lr,rmse_train,rmse_val,rmse_test,epochs,seconds
"""

from __future__ import annotations

import csv
import subprocess
from pathlib import Path

from .. import __version__
from ..errors import ConfigError

RESULT_COLUMNS = ("method", "dataset", "modality_mode", "lr", "rmse_train",
                  "rmse_val", "rmse_test", "epochs", "seconds")
CONFIG_SCHEMA_VERSION = 1


def append_results(path: str | Path, rows: list[dict]) -> None:
    path = Path(path)
    new_file = not path.exists()
    with open(path, "a", newline="", encoding="ascii") as f:
        writer = csv.DictWriter(f, fieldnames=RESULT_COLUMNS)
        if new_file:
            writer.writeheader()
        for row in rows:
            writer.writerow({col: _fmt(row.get(col)) for col in RESULT_COLUMNS})


def read_results(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="ascii") as f:
        return list(csv.DictReader(f))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def version_string() -> str:
    """Package version, extended with the git describe output when available."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"], cwd=Path(__file__).parent,
            capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"fusionrec-{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"fusionrec-{__version__}"


def write_run_config(path: str | Path, values: dict) -> None:
    """key=value lines, schema-versioned, one setting per line."""
    lines = [f"schema_version={CONFIG_SCHEMA_VERSION}",
             f"version={version_string()}"]
    for key, value in values.items():
        if "=" in str(key) or "\n" in str(value):
            raise ConfigError(f"config key/value not representable: {key!r}")
        lines.append(f"{key}={value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_run_config(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing config file: {path}")
    out: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    if out.get("schema_version") not in (str(CONFIG_SCHEMA_VERSION),):
        raise ConfigError(f"{path}: unsupported or missing schema_version")
    return out
