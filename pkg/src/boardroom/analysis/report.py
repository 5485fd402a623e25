"""Canonical serialisation of aggregate reports.

JSON output has sorted keys and floats rounded to 9 significant digits,
so it is a fixed point of parse-then-emit.  The CSV form has one row per
(point, metric) in this column order::

    point, params, section, metric, count, n, value, lo, hi

and a leading ``# schema_version=N`` line.
"""

from __future__ import annotations

import csv
import io
import json

from ..errors import UnsupportedFormat
from .runner import SCHEMA_VERSION

CSV_COLUMNS = ("point", "params", "section", "metric", "count", "n", "value", "lo", "hi")
FORMATS = {"json": "json", "structured": "json", "csv": "csv", "table": "csv"}


def _round(x):
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, float):
        return float(f"{x:.9g}")
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _params(p: dict) -> str:
    return ";".join(f"{k}={json.dumps(_round(v), sort_keys=True)}" for k, v in sorted(p.items()))


def emit_report(report: dict, fmt: str = "json") -> bytes:
    kind = FORMATS.get(fmt)
    if kind is None:
        raise UnsupportedFormat(f"{fmt!r}; expected one of {sorted(FORMATS)}")
    if kind == "json":
        text = json.dumps(_round(report), sort_keys=True, indent=1, separators=(",", ": "))
        return (text + "\n").encode()
    buf = io.StringIO()
    buf.write(f"# schema_version={report.get('schema_version', SCHEMA_VERSION)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for pt in report.get("points", []):
        idx, params = pt["index"], _params(pt.get("params", {}))
        for name, r in sorted(pt.get("rates", {}).items()):
            w.writerow([idx, params, "rate", name, r["count"], r["n"],
                        _num(r["rate"]), _num(r["lo"]), _num(r["hi"])])
        for name, m in sorted(pt.get("means", {}).items()):
            w.writerow([idx, params, "mean", name, m["sum"], m["n"], _num(m["mean"]), "", ""])
        for name, h in sorted(pt.get("histograms", {}).items()):
            for value, c in h.items():
                w.writerow([idx, params, "hist", f"{name}={value}", c, pt["trials"], "", "", ""])
    return buf.getvalue().encode()


def parse_report(data: bytes | str) -> dict:
    if isinstance(data, bytes):
        data = data.decode()
    return json.loads(data)
