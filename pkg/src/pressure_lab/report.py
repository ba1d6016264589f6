"""JSON and CSV serialization of reports.

JSON has no literal for infinities, so non-finite floats are written as the
strings ``"inf"``, ``"-inf"`` and ``"nan"``. Finite floats use Python's
shortest round-trip representation, which keeps output byte-stable.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

SCHEMA = "pressure-lab/report/v1"


def jsonable(obj):
    """Plain Python structure with numpy values converted and non-finite floats as strings."""
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def envelope(command, config, result):
    return {"schema": SCHEMA, "command": command, "config": config, "result": result}


def dumps_json(report):
    return json.dumps(jsonable(report), indent=2, allow_nan=False) + "\n"


def format_cell(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.17g}"
    return str(x)


def dumps_csv(columns, rows):
    """Header row then one line per row; floats with 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_cell(r.get(c)) for c in columns])
    return buf.getvalue()
