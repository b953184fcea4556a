"""Trial CSVs, summary JSON and run manifests.

The CSV header carries only the deterministic part of the manifest (tool
version and config), so running the embedded config again reproduces the
file byte for byte. Timestamps and paths live in the JSON outputs.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

from .experiments import ExperimentConfig, SummaryReport, TrialRecord

__all__ = [
    "RunManifest",
    "format_float",
    "trials_csv_text",
    "write_trials_csv",
    "read_trials_csv",
    "write_summary_json",
    "write_manifest",
    "utc_now",
]

CSV_MAGIC = "# levy_ssk trials"
COLUMNS = [f.name for f in fields(TrialRecord)]
_TYPES = {f.name: f.type for f in fields(TrialRecord)}


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    config: dict
    version: str
    master_seed: int
    started: str = ""
    finished: str = ""
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def _parse(name: str, text: str):
    kind = _TYPES[name]
    if kind == "bool":
        return text == "1"
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text


def _config_json(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))


def trials_csv_text(cfg: ExperimentConfig, records: list[TrialRecord], version: str) -> str:
    buf = io.StringIO()
    buf.write(f"{CSV_MAGIC}\n# version: {version}\n# config: {_config_json(cfg)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in sorted(records, key=lambda r: r.trial):
        w.writerow([_cell(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def write_trials_csv(path, cfg: ExperimentConfig, records: list[TrialRecord], version: str) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(trials_csv_text(cfg, records, version))
    return path


def read_trials_csv(path) -> tuple[ExperimentConfig, list[TrialRecord]]:
    """Config embedded in the header and the records below it."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_MAGIC:
        raise ValueError(f"{path} is not a trials CSV")
    cfg = None
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        if line.startswith("# config: "):
            cfg = ExperimentConfig.from_dict(json.loads(line[len("# config: "):]))
    else:
        body_start = len(lines)
    if cfg is None:
        raise ValueError(f"{path} carries no embedded config")
    rows = list(csv.reader(lines[body_start:]))
    if not rows or rows[0] != COLUMNS:
        raise ValueError(f"{path} has an unexpected column header")
    records = [TrialRecord(**{c: _parse(c, v) for c, v in zip(COLUMNS, row)}) for row in rows[1:]]
    return cfg, records


def _finite(o):
    # JSON has no NaN; non-finite floats are written as strings
    if isinstance(o, float) and not math.isfinite(o):
        return format_float(o)
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if hasattr(o, "item"):
        return _finite(o.item())
    return o


def write_summary_json(path, report: SummaryReport, manifest: RunManifest) -> Path:
    path = Path(path)
    doc = {"manifest": manifest.to_dict(), "summary": report.to_dict()}
    path.write_text(json.dumps(_finite(doc), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def write_manifest(path, manifest: RunManifest) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_finite(manifest.to_dict()), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path
