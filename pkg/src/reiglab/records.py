"""Flat estimate records and their delimited persistence format.

One record per (model, design, estimator, robust mode, epsilon, sample
sizes, seed) cell.  Files are UTF-8 comma-separated with a fixed header;
floats are written with 12 significant digits so a file round-trips
through ``read_records_csv`` without drift at that precision.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

__all__ = ["CSV_HEADER", "EstimateRecord", "read_records_csv", "write_records_csv"]

CSV_HEADER = [
    "model",
    "design",
    "estimator",
    "robust_mode",
    "epsilon",
    "N1",
    "N2",
    "M",
    "seed",
    "value",
    "lambda_star",
    "clip_count",
    "runtime_ms",
]

_FIELD_BY_COLUMN = {
    "N1": "n1",
    "N2": "n2",
    "M": "m",
}


@dataclass
class EstimateRecord:
    """One scalar estimate with its full provenance."""

    model: str
    design: str
    estimator: str
    robust_mode: str
    epsilon: float
    n1: int
    n2: int
    m: int
    seed: int
    value: float
    lambda_star: float | None = None
    clip_count: int = 0
    runtime_ms: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"estimate value must be finite, got {self.value!r}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon!r}")
        if self.runtime_ms < 0:
            raise ValueError(f"runtime_ms must be nonnegative, got {self.runtime_ms!r}")


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.12g}"
    return str(value)


def write_records_csv(records, path) -> None:
    """Write records to ``path`` in a fixed column order."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            row = []
            for col in CSV_HEADER:
                row.append(_format_value(getattr(rec, _FIELD_BY_COLUMN.get(col, col))))
            writer.writerow(row)


def read_records_csv(path) -> list[EstimateRecord]:
    """Read records written by :func:`write_records_csv`."""
    types = {f.name: f.type for f in fields(EstimateRecord)}
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames!r}")
        for row in reader:
            kwargs = {}
            for col, raw in row.items():
                name = _FIELD_BY_COLUMN.get(col, col)
                if name == "lambda_star":
                    kwargs[name] = None if raw == "" else float(raw)
                elif types[name].startswith("int"):
                    kwargs[name] = int(raw)
                elif types[name].startswith("float"):
                    kwargs[name] = float(raw)
                else:
                    kwargs[name] = raw
            out.append(EstimateRecord(**kwargs))
    return out
