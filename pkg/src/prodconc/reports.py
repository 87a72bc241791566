"""Deterministic report serialization: canonical JSON plus CSV curves.

Reports are byte-identical across reruns with the same config and seed,
except for a single isolated ``timestamp`` field; curves use 17 significant
digits so values round-trip exactly.
"""

import csv
import json
import math
from datetime import datetime, timezone

import numpy as np

SIG_DIGITS = 17


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def canonical_json(payload):
    """Sorted-key JSON text; numpy scalars and arrays are converted."""
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def format_sig(x):
    """One float at 17 significant digits with a '.' decimal separator."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.{SIG_DIGITS}g}"


def write_report(path, payload, timestamp=None):
    """Write one JSON report with the timestamp isolated in its own field."""
    body = dict(payload)
    body["timestamp"] = (timestamp if timestamp is not None
                         else datetime.now(timezone.utc).isoformat())
    with open(path, "w") as fh:
        fh.write(canonical_json(body))


def load_report(path):
    with open(path) as fh:
        return json.load(fh)


def strip_timestamp(report):
    """Copy of a report dict without its timestamp (for byte comparisons)."""
    out = dict(report)
    out.pop("timestamp", None)
    return out


def write_curve_csv(path, header, rows):
    """One CSV curve; every numeric cell is rendered via format_sig."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_sig(v) if isinstance(
                v, (bool, int, float, np.integer, np.floating)) else str(v)
                for v in row])
