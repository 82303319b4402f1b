"""CSV and JSON writers for curves, maps and KPI records."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def _fmt(x: float) -> str:
    return repr(float(x))


def write_table_csv(path, columns, rows) -> None:
    """Write ``rows`` (2-D array) under ``columns``; floats use round-trip repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in np.asarray(rows, dtype=np.float64):
            w.writerow([_fmt(v) for v in row])


def read_table_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(v) for v in row] for row in r]
    return header, np.array(rows, dtype=np.float64).reshape(-1, len(header))


def write_curve_csv(path, curve) -> None:
    write_table_csv(path, curve.COLUMNS, curve.as_columns())


def write_effmap_csv(path, emap) -> None:
    write_table_csv(path, emap.COLUMNS, emap.as_rows())


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_kpi_json(path, kpi_vector, **extra) -> None:
    record = {"kpis": kpi_vector.to_record()}
    record.update(extra)
    write_json(path, record)
