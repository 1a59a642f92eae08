"""Reading inputs and writing result artifacts.

JSON output is key-sorted with shortest round-trip float formatting, so
equal results give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from vce.errors import PreconditionError, VceError

SCHEMA_VERSION = 1


class InputError(VceError):
    """An input file is missing or malformed."""


def read_text(path: str | Path) -> str:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{p}: no such file")
    try:
        return p.read_text()
    except OSError as exc:
        raise InputError(f"{p}: cannot read ({exc.strerror})") from None


def digest(path: str | Path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_json(path: str | Path) -> Any:
    text = read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def parse_csv_rows(text: str, source: str = "<csv>") -> list[list[float]]:
    rows: list[list[float]] = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        try:
            vals = [float(v) for v in row]
        except ValueError:
            bad = next(j for j, v in enumerate(row) if not _is_float(v))
            raise InputError(f"{source}: row {lineno}, field {bad + 1} is not a number: {row[bad]!r}") from None
        if rows and len(vals) != len(rows[0]):
            raise InputError(f"{source}: row {lineno} has {len(vals)} fields, expected {len(rows[0])}")
        rows.append(vals)
    if not rows:
        raise InputError(f"{source}: no data rows")
    return rows


def _is_float(v: str) -> bool:
    try:
        float(v)
        return True
    except ValueError:
        return False


def load_table(path: str | Path, key: str) -> dict[str, Any]:
    """JSON object, or a CSV file turned into ``{key: rows}``."""
    if str(path).lower().endswith(".csv"):
        return {key: parse_csv_rows(read_text(path), str(path))}
    data = load_json(path)
    if isinstance(data, list):
        return {key: data}
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    return data


def wrap(loader, path, *args):
    """Run a ``from_dict`` style loader, prefixing domain errors with the file name."""
    try:
        return loader(*args)
    except PreconditionError as exc:
        raise InputError(f"{path}: {exc}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed content ({exc})") from None


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, Fraction)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else "-inf" if obj < 0 else "nan"
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def dumps_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def format_number(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating, Fraction)):
        return repr(float(v))
    return str(v)


def dumps_csv(rows: list[dict[str, Any]]) -> str:
    """Rows of scalars as CSV with a header taken from the first row."""
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(rows[0].keys())
    w.writerow(header)
    for r in rows:
        w.writerow([format_number(r.get(h, "")) for h in header])
    return buf.getvalue()
