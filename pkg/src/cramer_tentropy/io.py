"""CSV and JSON serialisation.

Grid functions are two-column CSV ``(abscissa, value)`` with the token
``inf`` for +inf; matrices are row-major CSV. Floats are written with
``repr`` so a rerun produces byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .conjugate import ExtendedRealGridFunction
from .operators import FiniteDynamicalSystem


def format_float(x: float) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(x)


def parse_float(tok: str) -> float:
    tok = tok.strip()
    if tok.lower() in ("inf", "+inf"):
        return math.inf
    return float(tok)


def _rows(text: str) -> list[list[str]]:
    return [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]


def _is_header(row: list[str]) -> bool:
    try:
        [parse_float(c) for c in row]
    except ValueError:
        return True
    return False


def grid_to_csv(x, values, header: tuple[str, str] = ("x", "value")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for a, v in zip(np.asarray(x, dtype=float), np.asarray(values, dtype=float)):
        w.writerow([format_float(a), format_float(v)])
    return buf.getvalue()


def grid_from_csv(text: str) -> ExtendedRealGridFunction:
    rows = _rows(text)
    if rows and _is_header(rows[0]):
        rows = rows[1:]
    if any(len(r) != 2 for r in rows):
        raise ValueError("grid CSV needs exactly two columns (abscissa, value)")
    x = [parse_float(r[0]) for r in rows]
    v = [parse_float(r[1]) for r in rows]
    return ExtendedRealGridFunction(np.array(x), np.array(v))


def matrix_to_csv(A) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in np.atleast_2d(np.asarray(A, dtype=float)):
        w.writerow([format_float(v) for v in row])
    return buf.getvalue()


def matrix_from_csv(text: str) -> np.ndarray:
    rows = _rows(text)
    A = np.array([[parse_float(c) for c in r] for r in rows], dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix CSV must be square")
    return A


def jsonable(obj):
    """Recursively replace non-finite floats by strings and arrays by lists."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else format_float(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_system(path: str | Path) -> FiniteDynamicalSystem:
    return FiniteDynamicalSystem.from_json(Path(path).read_text())
