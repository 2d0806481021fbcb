"""Diagnostics reports and their deterministic CSV / JSON serialisation.

CSV bodies contain only data derived from the configuration and seed, so
re-running a seeded command reproduces them byte for byte; wall-clock timings
and timestamps live in the JSON envelope only.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"
PASS, FAIL, INFO = "PASS", "FAIL", "INFO"


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.15e}"
    if isinstance(v, (complex, np.complexfloating)):
        return f"{v.real:.15e}{v.imag:+.15e}j"
    if isinstance(v, (list, tuple)):
        return ";".join(fmt(x) for x in v)
    return str(v)


def format_rows(rows: list[dict], header: list[str] | None = None) -> str:
    if header is None:
        header = []
        for r in rows:
            for k in r:
                if k not in header:
                    header.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(r.get(k)) for k in header])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


@dataclass
class DiagnosticsReport:
    suite: str
    config: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    header: list | None = None

    def add(self, status: str = INFO, **row) -> dict:
        if status == FAIL and not {"bound", "lhs", "rhs"} <= row.keys():
            raise ValueError("a FAIL row must carry 'bound', 'lhs' and 'rhs'")
        row = dict(row, status=status)
        self.rows.append(row)
        return row

    def check(self, ok: bool, bound: str, lhs: float, rhs: float, **row) -> dict:
        return self.add(PASS if ok else FAIL, **row, bound=bound, lhs=lhs, rhs=rhs)

    @property
    def failures(self) -> list[dict]:
        return [r for r in self.rows if r.get("status") == FAIL]

    @property
    def passed(self) -> bool:
        return not self.failures

    def extend(self, other: "DiagnosticsReport", **tags) -> None:
        for r in other.rows:
            self.rows.append(dict(tags, **r))
        for k, v in other.summary.items():
            self.summary[f"{other.suite}.{k}" if k in self.summary else k] = v
        self.timings.update({f"{other.suite}.{k}": v for k, v in other.timings.items()})

    def to_csv(self) -> str:
        return format_rows(self.rows, self.header)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "suite": self.suite,
            "passed": self.passed,
            "row_count": len(self.rows),
            "failures": len(self.failures),
            "summary": _jsonable(self.summary),
            "config": _jsonable(self.config),
            "timings": _jsonable(self.timings),
            "generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }


def emit_report(report: DiagnosticsReport, out_dir, formats=("csv", "json"),
                stem: str | None = None) -> list[Path]:
    """Write <stem>.csv and <stem>.json under out_dir; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or report.suite.replace("-", "_")
    written = []
    for f in formats:
        if f == "csv":
            p = out / f"{stem}.csv"
            p.write_text(report.to_csv(), encoding="utf-8")
        elif f == "json":
            p = out / f"{stem}.json"
            p.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        else:
            raise ValueError(f"unknown report format {f!r}")
        written.append(p)
    return written


def write_table(rows: list[dict], path, header: list[str] | None = None) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(format_rows(rows, header), encoding="utf-8")
    return p
