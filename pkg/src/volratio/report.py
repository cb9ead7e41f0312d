"""Experiment reports and their CSV / JSON serialisation.

CSV layout (one row per trial, fixed column order)::

    experiment,n,trial,seed,value,stderr,flag

``experiment`` names the quantity in the row, ``n`` is the ambient
dimension, ``trial`` the trial index (or the index into a body list given in
the config), ``seed`` the run seed, ``value`` and ``stderr`` the measured
quantity and its standard error (0 when exact), ``flag`` a status token such
as ``ok``, ``violation`` or ``approx``.  Floats are written with ``repr`` so
files round-trip bit-exactly.

The JSON document holds the same rows plus ``config``, ``aggregates`` and
``notes``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("experiment", "n", "trial", "seed", "value", "stderr", "flag")


@dataclass
class ReportRow:
    experiment: str
    n: int
    trial: int
    seed: int
    value: float
    stderr: float = 0.0
    flag: str = "ok"


@dataclass
class ExperimentReport:
    experiment: str
    config: dict = field(default_factory=dict)
    rows: list[ReportRow] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    violations: int = 0  # invariant violations detected (drives exit code 2)

    def values(self, experiment: str | None = None, n: int | None = None) -> np.ndarray:
        return np.array([r.value for r in self.rows
                         if (experiment is None or r.experiment == experiment)
                         and (n is None or r.n == n)])

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": _jsonable(self.config),
            "columns": list(CSV_COLUMNS),
            "rows": [asdict(r) for r in self.rows],
            "aggregates": _jsonable(self.aggregates),
            "notes": list(self.notes),
            "violations": self.violations,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentReport":
        return cls(
            experiment=obj["experiment"],
            config=obj.get("config", {}),
            rows=[ReportRow(**r) for r in obj.get("rows", [])],
            aggregates=obj.get("aggregates", {}),
            notes=list(obj.get("notes", [])),
            violations=int(obj.get("violations", 0)),
        )


def _jsonable(obj):
    """Convert numpy scalars/arrays and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return obj


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([r.experiment, r.n, r.trial, r.seed, _fmt(r.value), _fmt(r.stderr), r.flag])
    return buf.getvalue()


def report_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def emit_report(report: ExperimentReport, fmt: str, path) -> None:
    """Write ``report`` to ``path`` as ``csv`` or ``json`` (``-`` for stdout)."""
    if fmt == "csv":
        text = report_csv(report)
    elif fmt == "json":
        text = report_json(report)
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")
    if str(path) == "-":
        import sys

        sys.stdout.write(text)
        return
    Path(path).write_text(text)


def load_report_json(path) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(Path(path).read_text()))


def load_report_csv(path) -> list[ReportRow]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        return [
            ReportRow(r["experiment"], int(r["n"]), int(r["trial"]), int(r["seed"]),
                      float(r["value"]), float(r["stderr"]), r["flag"])
            for r in rd
        ]
