"""Deterministic CSV/JSON export of homogeneous record lists.

Floats are written with 17 significant digits and always carry a ``.``,
an exponent, or are one of ``inf``/``-inf``/``nan``, so an importer can
tell them from integers.  Complex scalars are ``a+bj`` in CSV cells and
``{"re": a, "im": b}`` in JSON; vectors and matrices are JSON arrays (in
CSV, the JSON text of the array).  A CSV file may start with one
``# {...}`` line holding metadata and the column types.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
import tempfile
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "dumps_json",
    "export_records",
    "format_float",
    "import_records",
    "read_text",
    "render_csv",
    "render_json",
    "to_plain",
    "write_atomic",
]


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = "%.17g" % x
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def _format_complex(z: complex) -> str:
    im = format_float(z.imag)
    if not im.startswith("-"):
        im = "+" + im
    return f"{format_float(z.real)}{im}j"


def to_plain(v):
    """Map numpy, Fraction and enum values onto plain Python types."""
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, np.ndarray):
        return [to_plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [to_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): to_plain(x) for k, x in v.items()}
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating, Fraction)):
        return float(v)
    if isinstance(v, (complex, np.complexfloating)):
        return complex(v)
    if v is None or isinstance(v, str):
        return v
    raise DomainError(f"cannot export value of type {type(v).__name__}")


def dumps_json(v, indent: Optional[int] = None, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits (non-finite as strings)."""
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        s = format_float(v)
        return s if math.isfinite(v) else json.dumps(s)
    if isinstance(v, complex):
        return dumps_json({"re": v.real, "im": v.imag})
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, list):
        if indent is not None and v and all(isinstance(x, dict) for x in v):
            # record lists: one compact record per line
            pad = " " * (indent * (_level + 1))
            return "[\n" + ",\n".join(pad + dumps_json(x) for x in v) + "\n" + " " * (indent * _level) + "]"
        return "[" + ", ".join(dumps_json(x) for x in v) + "]"
    if isinstance(v, dict):
        if indent is None or not v:
            return "{" + ", ".join(f"{json.dumps(k)}: {dumps_json(x)}" for k, x in v.items()) + "}"
        # only top-level and nested dicts are broken across lines
        pad = " " * (indent * (_level + 1))
        items = [f"{pad}{json.dumps(k)}: {dumps_json(x, indent, _level + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + " " * (indent * _level) + "}"
    raise DomainError(f"cannot export value of type {type(v).__name__}")


def _kind(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    if isinstance(v, complex):
        return "complex"
    if isinstance(v, str):
        return "str"
    return "json"


def _prepare(records: Iterable, fields: Optional[list]):
    rows = [to_plain(r.record() if hasattr(r, "record") else r) for r in records]
    if fields is None:
        fields = list(rows[0]) if rows else []
    for r in rows:
        if not isinstance(r, dict) or list(r) != fields:
            raise DomainError("records must be homogeneous dicts with the same fields")
    types = {}
    for f in fields:
        kinds = {_kind(r[f]) for r in rows} - {"none"}
        if kinds == {"int", "float"}:
            kinds = {"float"}
        types[f] = kinds.pop() if len(kinds) == 1 else ("json" if kinds else "none")
    return rows, fields, types


def _cell(v, kind: str) -> str:
    if v is None:
        return ""
    if kind == "float":
        return format_float(v)
    if kind == "int":
        return str(v)
    if kind == "bool":
        return "true" if v else "false"
    if kind == "complex":
        return _format_complex(v)
    if kind == "str":
        return v
    return dumps_json(v)


def render_csv(records: Iterable, fields: Optional[list] = None, meta: Optional[dict] = None) -> str:
    rows, fields, types = _prepare(records, fields)
    buf = io.StringIO()
    header = {"types": types}
    if meta:
        header["meta"] = to_plain(meta)
    buf.write("# " + dumps_json(header) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_cell(r[f], types[f]) for f in fields])
    return buf.getvalue()


def render_json(records: Iterable, fields: Optional[list] = None, meta: Optional[dict] = None) -> str:
    rows, fields, types = _prepare(records, fields)
    doc = {"meta": to_plain(meta or {}), "fields": fields, "types": types, "records": rows}
    return dumps_json(doc, indent=1) + "\n"


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    except OSError as exc:
        raise ConfigError(f"unwritable path: {path} ({exc.strerror})", path=path) from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        os.unlink(tmp)
        raise ConfigError(f"unwritable path: {path} ({exc.strerror})", path=path) from exc


def export_records(records, path, fmt: str = "csv", fields=None, meta=None) -> None:
    if fmt == "csv":
        text = render_csv(records, fields, meta)
    elif fmt == "json":
        text = render_json(records, fields, meta)
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    write_atomic(path, text)


# ---------------------------------------------------------------------------
# import
# ---------------------------------------------------------------------------


def _parse_float(s: str) -> float:
    return float(s)


def _decode_json_value(v):
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return complex(_decode_json_value(v["re"]), _decode_json_value(v["im"]))
    if isinstance(v, list):
        return [_decode_json_value(x) for x in v]
    if isinstance(v, dict):
        return {k: _decode_json_value(x) for k, x in v.items()}
    if v in ("nan", "inf", "-inf"):
        return float(v)
    return v


def _loads(text: str):
    return _decode_json_value(json.loads(text))


def _parse_cell(s: str, kind: str):
    if s == "" and kind != "str":
        return None
    if kind == "float":
        return _parse_float(s)
    if kind == "int":
        return int(s)
    if kind == "bool":
        return s == "true"
    if kind == "complex":
        return complex(s)
    if kind == "str":
        return s
    return _loads(s)


def read_text(text: str, fmt: str):
    """Parse exported text; returns ``(records, fields, meta)``."""
    if fmt == "json":
        doc = json.loads(text)
        types = doc.get("types", {})
        rows = []
        for r in doc["records"]:
            row = {}
            for f in doc["fields"]:
                v = _decode_json_value(r[f])
                if types.get(f) == "float" and isinstance(v, int):
                    v = float(v)
                row[f] = v
            rows.append(row)
        return rows, doc["fields"], _decode_json_value(doc.get("meta", {}))
    if fmt != "csv":
        raise ConfigError(f"unknown format {fmt!r}")
    lines = text.splitlines(keepends=True)
    header = {}
    if lines and lines[0].startswith("# "):
        header = json.loads(lines[0][2:])
        lines = lines[1:]
    reader = csv.reader(lines)
    try:
        fields = next(reader)
    except StopIteration:
        return [], [], _decode_json_value(header.get("meta", {}))
    types = header.get("types", {})
    rows = [{f: _parse_cell(c, types.get(f, "str")) for f, c in zip(fields, cells)} for cells in reader]
    return rows, fields, _decode_json_value(header.get("meta", {}))


def import_records(path, fmt: Optional[str] = None):
    path = os.fspath(path)
    if fmt is None:
        fmt = "json" if path.endswith(".json") else "csv"
    with open(path, encoding="utf-8", newline="") as fh:
        return read_text(fh.read(), fmt)
