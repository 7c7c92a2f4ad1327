"""CSV and JSON writers with a stable layout."""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write rows with floats at 17 significant digits. Returns the row count."""
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([fmt_value(x) for x in row])
            n += 1
    return n


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (frozenset, set)):
        return sorted(to_jsonable(v) for v in obj)
    return obj


def write_json(path, obj) -> None:
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def emit(report, path, fmt: str = "json", header: Sequence[str] | None = None) -> Path:
    """Write a report as JSON, or as CSV when it is a sequence of rows."""
    path = Path(path)
    if fmt == "json":
        write_json(path, report)
    elif fmt == "csv":
        if header is None:
            raise ValueError("csv output needs a header")
        write_csv(path, header, report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def finite_or_none(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x
