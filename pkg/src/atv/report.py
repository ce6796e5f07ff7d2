"""Stable, diffable serialization: round-trip CSV tables and canonical JSON.

Floats are written as their shortest round-trip decimal (Python repr), so
re-reading a written table recovers the exact bits; JSON reports sort keys
and forbid non-finite values, making serialization a pure function of the
value — byte-identical across runs, suitable for golden-file regression
tests.
"""

from __future__ import annotations

import csv
import dataclasses
import json

import numpy as np


def _cell(x) -> str:
    if isinstance(x, (np.floating, float)):
        return repr(float(x))
    if isinstance(x, (np.integer, int)) and not isinstance(x, bool):
        return str(int(x))
    return str(x)


def write_csv(table, path) -> None:
    """Write a rectangular table (header row first) as RFC-4180 CSV.

    Lines end with a bare newline; floats keep full round-trip precision.
    """
    rows = list(table)
    if not rows:
        raise ValueError("table needs at least a header row")
    width = len(rows[0])
    for r in rows:
        if len(r) != width:
            raise ValueError("table is not rectangular")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        for r in rows:
            writer.writerow([_cell(x) for x in r])


def read_csv(path):
    """Read a CSV back as a list of string rows (header included)."""
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh)]


def field_table(values) -> list:
    """An (index, value) table for a scalar field / signed density."""
    out = [["index", "value"]]
    for i, v in enumerate(np.asarray(values, dtype=float)):
        out.append([i, float(v)])
    return out


def write_field_csv(values, path) -> None:
    write_csv(field_table(values), path)


def read_field_csv(path) -> np.ndarray:
    """Read an (index, value) CSV written by write_field_csv, bit-exactly.

    Indices must be 0..n-1, each exactly once.
    """
    rows = read_csv(path)
    if not rows or [c.strip() for c in rows[0][:2]] != ["index", "value"]:
        raise ValueError(f"{path}: expected header 'index,value'")
    body = rows[1:]
    values = np.empty(len(body))
    seen = np.zeros(len(body), dtype=bool)
    for row in body:
        idx = int(row[0])
        if not 0 <= idx < len(body) or seen[idx]:
            raise ValueError(f"{path}: indices must cover 0..{len(body) - 1} exactly once")
        seen[idx] = True
        values[idx] = float(row[1])
    return values


def pairs_table(pair_field) -> list:
    """An (i, j, value) table for a pair field or kernel."""
    dom = pair_field.domain
    out = [["i", "j", "value"]]
    for i, j, v in zip(dom.pair_rows, dom.ball_indices, pair_field.values):
        out.append([int(i), int(j), float(v)])
    return out


def to_jsonable(obj):
    """Recursively convert dataclasses/numpy containers to JSON-safe values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Canonical JSON text: sorted keys, round-trip floats, no NaN/inf."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def write_report(report, path) -> None:
    """Serialize a SolveReport / SweepResult (any dataclass) as canonical JSON."""
    with open(path, "w") as fh:
        fh.write(canonical_json(report))
        fh.write("\n")


def read_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
