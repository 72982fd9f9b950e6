"""CSV artifact and run-manifest plumbing.

Every CSV starts with a single comment line carrying the config hash, master
seed and tool version, then an ordinary header row.  Floats are written with
repr (shortest round-trip form), so identical values produce identical bytes.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str | Path, columns: list[str], rows, meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta_line = "# " + " ".join(f"{k}={v}" for k, v in meta.items())
    lines = [meta_line, ",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: str | Path) -> tuple[dict, list[str], list[list[str]]]:
    lines = Path(path).read_text().splitlines()
    meta: dict = {}
    start = 0
    if lines and lines[0].startswith("#"):
        for token in lines[0][1:].strip().split():
            if "=" in token:
                key, val = token.split("=", 1)
                meta[key] = val
        start = 1
    columns = lines[start].split(",")
    rows = [line.split(",") for line in lines[start + 1:] if line]
    return meta, columns, rows


def read_csv_floats(path: str | Path) -> tuple[dict, list[str], np.ndarray]:
    meta, columns, rows = read_csv(path)
    data = np.array([[float(v) for v in row] for row in rows]) if rows else np.empty((0, len(columns)))
    return meta, columns, data


@dataclass
class RunManifest:
    config_hash: str
    master_seed: int
    version: str = __version__
    stages: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    def record_stage(self, name: str, outputs: list[str], seconds: float,
                     status: str = "ok", inputs: list[str] | None = None) -> None:
        self.stages[name] = {
            "status": status,
            "inputs": sorted(inputs or []),
            "outputs": sorted(outputs),
            "seconds": round(seconds, 3),
        }

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "version": self.version,
            "stages": self.stages,
            "timing": self.timing,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def validate_manifest(manifest_path: str | Path) -> list[str]:
    """Check that every listed output exists and carries the manifest's hash.

    Returns a list of problems found (empty means consistent)."""
    data = json.loads(Path(manifest_path).read_text())
    base = Path(manifest_path).parent
    issues = []
    for stage, info in data.get("stages", {}).items():
        for name in info.get("outputs", []):
            p = base / name
            if not p.exists():
                issues.append(f"{stage}: missing output {name}")
                continue
            if p.suffix == ".csv":
                meta, _, _ = read_csv(p)
                if meta.get("config_hash") != data["config_hash"]:
                    issues.append(f"{stage}: {name} carries hash {meta.get('config_hash')}")
    return issues


class StageTimer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start
        return False
