"""Curve files and report serialization.

Floats are written with 17 significant digits, which round-trips every
double, and infinities as ``Infinity``. Output is fully determined by the
input values, so repeated runs give byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
from typing import Iterable, Optional, Sequence

import numpy as np

from .curve_model import ArcCurve, Polyline
from .errors import ValidationError


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _plain(obj):
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, dict)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        body = (",\n").join(pad + _encode(v, indent, level + 1) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = (",\n").join(f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items())
        return "{\n" + body + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text for reports: 17 significant digits, ``Infinity`` for infinite values."""
    return _encode(_plain(obj), indent, 0) + "\n"


def write_text(path: Optional[str], text: str):
    if path is None or path == "-":
        import sys
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else _cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return " ".join(format_float(x) if isinstance(x, float) else str(x) for x in v)
    return str(v)


def key_value_csv(report: dict) -> str:
    """Two-column CSV of a flat report; nested lists are space separated."""
    return csv_text(["key", "value"], [(k, v) for k, v in _plain(report).items()])


def curve_to_dict(p) -> dict:
    if isinstance(p, ArcCurve):
        p = p.to_polyline()
    return {"dim": p.dim, "closed": bool(p.closed), "points": p.points.tolist()}


def curve_json(p) -> str:
    return dumps(curve_to_dict(p))


def curve_csv(p) -> str:
    if isinstance(p, ArcCurve):
        p = p.to_polyline()
    header = ["x", "y", "z"][: p.dim]
    return csv_text(header, p.points.tolist())


def write_curve(path: Optional[str], p, fmt: str = "json"):
    write_text(path, curve_csv(p) if fmt == "csv" else curve_json(p))


def _parse_float(s, field):
    try:
        return float(s)
    except (TypeError, ValueError):
        raise ValidationError(f"{field}: not a number: {s!r}") from None


def curve_from_dict(data) -> Polyline:
    if not isinstance(data, dict):
        raise ValidationError("curve file: top level must be an object")
    for key in ("dim", "closed", "points"):
        if key not in data:
            raise ValidationError(f"{key}: missing field")
    dim = data["dim"]
    if dim not in (2, 3) or isinstance(dim, bool):
        raise ValidationError(f"dim: must be 2 or 3, got {dim!r}")
    if not isinstance(data["closed"], bool):
        raise ValidationError("closed: must be true or false")
    pts = data["points"]
    if not isinstance(pts, list) or not pts:
        raise ValidationError("points: must be a non-empty list")
    for k, p in enumerate(pts):
        if not isinstance(p, list) or len(p) != dim:
            raise ValidationError(f"points[{k}]: expected {dim} coordinates")
    arr = np.array([[_parse_float(v, f"points[{k}]") for v in p] for k, p in enumerate(pts)])
    return Polyline(arr, data["closed"])


def read_curve(path: str, closed: Optional[bool] = None) -> Polyline:
    """Read a curve from JSON, or from CSV with header ``x,y`` or ``x,y,z``.

    CSV files carry no closedness, so ``closed`` must be given for them
    (the CLI passes ``--closed`` / ``--open``; closed is the default there).
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"input: cannot read {path}: {exc.strerror}") from None
    if path.lower().endswith(".csv") or (text.lstrip()[:1] not in ("{", "[")):
        rows = list(csv.reader(_io.StringIO(text)))
        rows = [r for r in rows if r]
        if not rows or [h.strip() for h in rows[0]] not in (["x", "y"], ["x", "y", "z"]):
            raise ValidationError("header: CSV curves need a header 'x,y' or 'x,y,z'")
        dim = len(rows[0])
        pts = []
        for k, r in enumerate(rows[1:]):
            if len(r) != dim:
                raise ValidationError(f"row {k + 2}: expected {dim} values")
            pts.append([_parse_float(v, f"row {k + 2}") for v in r])
        if not pts:
            raise ValidationError("points: CSV file has no data rows")
        return Polyline(np.array(pts), True if closed is None else bool(closed))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"input: {path} is not valid JSON ({exc.msg}, line {exc.lineno})") from None
    p = curve_from_dict(data)
    if closed is not None and closed != p.closed:
        p = Polyline(p.points, closed)
    return p
