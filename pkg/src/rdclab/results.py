"""Append-only results table shared by the trainer and the eval CLI.

CSV is the canonical interchange (JSON mirrors it). The first line stamps the
schema version; appends are serialized under an exclusive file lock so
parallel sweep workers cannot interleave rows.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from filelock import FileLock

from .datamodel import CurvePoint

__all__ = ["COLUMNS", "SCHEMA_HEADER", "ResultsTable", "export_table"]

COLUMNS = [
    "run_id",
    "mode",
    "objective",
    "dim",
    "L",
    "rate",
    "lambda_c",
    "lambda_p",
    "mse",
    "ce",
    "accuracy",
    "w1_proxy",
    "seed",
]
SCHEMA_HEADER = "# rdclab-results v1"

# CurvePoint field feeding each CSV column ("L" is stored as "levels").
_FIELD_FOR_COLUMN = {c: ("levels" if c == "L" else c) for c in COLUMNS}


def _row_of(point: CurvePoint) -> list[str]:
    kv = point.to_kv()
    return [kv[_FIELD_FOR_COLUMN[c]] for c in COLUMNS]


class ResultsTable:
    """CSV-backed table of curve points keyed by run_id."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self._lock = FileLock(str(self.path) + ".lock")

    def append(self, point: CurvePoint) -> None:
        with self._lock:
            rows = {p.run_id: p for p in self._read()}
            if point.run_id in rows:
                raise ValueError(f"duplicate run_id {point.run_id}")
            fresh = not self.path.exists()
            with open(self.path, "a", newline="") as f:
                w = csv.writer(f)
                if fresh:
                    f.write(SCHEMA_HEADER + "\n")
                    w.writerow(COLUMNS)
                w.writerow(_row_of(point))

    def _read(self) -> list[CurvePoint]:
        if not self.path.exists():
            return []
        with open(self.path, newline="") as f:
            lines = [l for l in f if not l.startswith("#")]
        reader = csv.DictReader(io.StringIO("".join(lines)))
        return [
            CurvePoint.from_kv({_FIELD_FOR_COLUMN[k]: v for k, v in row.items()})
            for row in reader
        ]

    def load(self) -> list[CurvePoint]:
        with self._lock:
            return self._read()

    def run_ids(self) -> set[str]:
        return {p.run_id for p in self.load()}


def export_table(results: list[CurvePoint], fmt: str, path: Path | str) -> Path:
    """Write results as 'csv' or 'json'. Empty input raises ValueError."""
    if not results:
        raise ValueError("no results to export")
    path = Path(path)
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(SCHEMA_HEADER + "\n")
        w = csv.writer(buf)
        w.writerow(COLUMNS)
        for p in results:
            w.writerow(_row_of(p))
        path.write_text(buf.getvalue())
    elif fmt == "json":
        payload = {
            "schema": SCHEMA_HEADER.lstrip("# "),
            "rows": [dict(zip(COLUMNS, _row_of(p))) for p in results],
        }
        path.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def import_table(path: Path | str) -> list[CurvePoint]:
    path = Path(path)
    if path.suffix == ".json":
        payload = json.loads(path.read_text())
        return [
            CurvePoint.from_kv({_FIELD_FOR_COLUMN[k]: v for k, v in row.items()})
            for row in payload["rows"]
        ]
    return ResultsTable(path).load()
