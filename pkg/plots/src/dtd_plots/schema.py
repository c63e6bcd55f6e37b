"""Readers/validators for the simulator's output files.

Each reader checks the documented schema up front and raises SchemaError
naming the offending column, so the CLI can fail with a useful message
instead of a KeyError deep inside matplotlib.
"""
import csv
import json
from dataclasses import dataclass, field

import numpy as np


class SchemaError(Exception):
    """An input file does not match the documented schema."""


# ---------------------------------------------------------------------------
# daily.csv
# ---------------------------------------------------------------------------

@dataclass
class DailyData:
    classes: list
    day: np.ndarray
    tstt: np.ndarray
    tstt_smoothed: np.ndarray
    strength: np.ndarray
    trust: dict = field(default_factory=dict)      # class -> array
    error: dict = field(default_factory=dict)
    xi: dict = field(default_factory=dict)
    reliance: dict = field(default_factory=dict)


_DAILY_FIXED = ("day", "tstt", "tstt_smoothed", "S")
_CLASS_GROUPS = ("T", "e", "xi", "lambda")


def read_daily(path) -> DailyData:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    for col in _DAILY_FIXED:
        if col not in header:
            raise SchemaError(f"{path}: missing column '{col}'")
    classes = [c[2:] for c in header if c.startswith("T_")]
    if not classes:
        raise SchemaError(f"{path}: missing column 'T_<class>'")
    for prefix in _CLASS_GROUPS:
        for name in classes:
            if f"{prefix}_{name}" not in header:
                raise SchemaError(f"{path}: missing column '{prefix}_{name}'")
        # a per-class column whose class has no T_ column means the trust
        # column was dropped, not that the class doesn't exist
        for col in header:
            if col.startswith(f"{prefix}_") and col[len(prefix) + 1:] not in classes:
                raise SchemaError(f"{path}: column '{col}' has no matching "
                                  f"'T_{col[len(prefix) + 1:]}'")
    idx = {c: i for i, c in enumerate(header)}
    width = len(header)
    for r in rows:
        if len(r) != width:
            raise SchemaError(f"{path}: row has {len(r)} fields, header has {width}")
    try:
        table = np.asarray(rows, dtype=float)
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric cell ({exc})") from None
    col = lambda c: table[:, idx[c]]
    return DailyData(
        classes=classes,
        day=col("day").astype(int),
        tstt=col("tstt"),
        tstt_smoothed=col("tstt_smoothed"),
        strength=col("S"),
        trust={k: col(f"T_{k}") for k in classes},
        error={k: col(f"e_{k}") for k in classes},
        xi={k: col(f"xi_{k}") for k in classes},
        reliance={k: col(f"lambda_{k}") for k in classes},
    )


# ---------------------------------------------------------------------------
# sweep.csv
# ---------------------------------------------------------------------------

@dataclass
class SweepData:
    param: str
    rows: list  # list of dicts with parsed floats / None


_SWEEP_REQUIRED = ("param", "value", "trust_mode", "poatt_aw")
_SWEEP_FLOATS = ("value", "poatt_aw", "poatt_peak", "tia",
                 "trust_recovery_day", "tstt_recovery_day",
                 "hidden_window_days", "eta")


def read_sweep(path) -> SweepData:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        for col in _SWEEP_REQUIRED:
            if col not in reader.fieldnames:
                raise SchemaError(f"{path}: missing column '{col}'")
        raw = list(reader)
    rows = []
    for r in raw:
        if r.get("error"):
            continue  # failed scenarios carry no numbers
        parsed = dict(r)
        for c in _SWEEP_FLOATS:
            v = r.get(c)
            if v is None or v == "":
                parsed[c] = None
            else:
                try:
                    parsed[c] = float(v)
                except ValueError:
                    raise SchemaError(
                        f"{path}: non-numeric value {v!r} in column '{c}'"
                    ) from None
        rows.append(parsed)
    if not rows:
        raise SchemaError(f"{path}: no usable rows")
    param = rows[0]["param"]
    rows.sort(key=lambda r: (r["value"], r["trust_mode"]))
    return SweepData(param=param, rows=rows)


def sweep_series(data: SweepData, column: str, mode: str):
    """(values, column) arrays for one trust mode, None entries dropped."""
    pairs = [(r["value"], r[column]) for r in data.rows
             if r["trust_mode"] == mode and r[column] is not None]
    if not pairs:
        return np.empty(0), np.empty(0)
    xs, ys = zip(*pairs)
    return np.asarray(xs), np.asarray(ys)


# ---------------------------------------------------------------------------
# summary.json
# ---------------------------------------------------------------------------

_SUMMARY_REQUIRED = ("poatt_aw",)


def read_summary(path) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    for key in _SUMMARY_REQUIRED:
        if key not in payload:
            raise SchemaError(f"{path}: missing key '{key}'")
    return payload
