"""CSV/JSON readers and writers.

Readers reject NaN/Inf. Writers serialize reals with 17 significant digits
(round-trip exact for float64), emit CSV with a header row and JSON with
stable key order, and refuse non-finite values so an internal invariant
breach can never produce a silently corrupt report.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import InputDataError
from .model import DesignMatrix


def _parse_real(token, where):
    try:
        value = float(token)
    except ValueError:
        raise InputDataError("%s: cannot parse %r as a real number" % (where, token)) from None
    if not math.isfinite(value):
        raise InputDataError("%s: non-finite value %r rejected" % (where, token))
    return value


def read_design_csv(path, normalize=False) -> DesignMatrix:
    """Read a design matrix; the first row may be a header of column labels."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise InputDataError("%s: empty design file" % path)
    labels = None
    start = 0
    try:
        [_parse_real(tok, path) for tok in rows[0]]
    except InputDataError:
        labels = [tok.strip() for tok in rows[0]]
        start = 1
    if start >= len(rows):
        raise InputDataError("%s: design file has a header but no data rows" % path)
    width = len(rows[start])
    data = []
    for i, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise InputDataError("%s: row %d has %d fields, expected %d" % (path, i, len(row), width))
        data.append([_parse_real(tok, "%s row %d" % (path, i)) for tok in row])
    return DesignMatrix(np.array(data), column_labels=labels, normalize=normalize)


def read_vector_csv(path) -> np.ndarray:
    """Read a single-column CSV of reals (optional non-numeric header cell)."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise InputDataError("%s: empty vector file" % path)
    values = []
    for i, row in enumerate(rows, start=1):
        if len(row) != 1:
            raise InputDataError("%s: row %d has %d fields, expected 1" % (path, i, len(row)))
        tok = row[0]
        if i == 1:
            try:
                values.append(_parse_real(tok, path))
            except InputDataError:
                continue  # header cell
        else:
            values.append(_parse_real(tok, "%s row %d" % (path, i)))
    if not values:
        raise InputDataError("%s: no numeric rows" % path)
    return np.array(values)


def fmt_real(x) -> str:
    """17-significant-digit representation; exact on round trip."""
    x = float(x)
    if not math.isfinite(x):
        raise InputDataError("refusing to serialize non-finite value %r" % x)
    return "%.17g" % x


def _fmt_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_real(value)
    return str(value)


def write_csv(path, header, rows):
    """Write rows (iterables of cells) under a header; deterministic bytes."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_fmt_cell(cell) for cell in row])


def write_coefficients_csv(path, values):
    """Coefficient vector as ``index,value`` rows with 1-based indices."""
    values = np.asarray(values, dtype=float)
    write_csv(path, ["index", "value"], [(k + 1, v) for k, v in enumerate(values)])


def _json_fragments(obj, indent):
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        keys = sorted(obj)
        if any(not isinstance(k, str) for k in keys):
            raise InputDataError("JSON object keys must be strings")
        items = [
            "%s  %s: %s" % (pad, json.dumps(k), _json_fragments(obj[k], indent + 2))
            for k in keys
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = ["%s  %s" % (pad, _json_fragments(v, indent + 2)) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_real(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise InputDataError("cannot serialize %r to JSON" % type(obj).__name__)


def write_json(path, obj):
    """JSON with sorted keys and 17-significant-digit reals."""
    text = _json_fragments(obj, 0) + "\n"
    with open(Path(path), "w", newline="") as fh:
        fh.write(text)
