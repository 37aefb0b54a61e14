"""Flat-file serialization: CSV tables and JSON documents, written atomically.

Floats use Python's shortest round-trip repr, so reading a value back gives
the identical double.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .multiscale import ResonanceCurve, Stability
from .simulate import SimTrace, SweepResult

CURVE_HEADER = ("sigma", "omega_tau", "freq_hz", "a_stable_low", "a_unstable", "a_stable_high",
                "branch_count")
TRACE_HEADER = ("time", "x", "y")
SWEEP_HEADER = ("freq_hz", "omega_tau", "amplitude", "dc_offset", "converged")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return repr(v)


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows) -> Path:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return atomic_write(path, "\n".join(lines) + "\n")


def read_csv(path) -> tuple:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Stability):
        return obj.value
    return obj


def write_json(path, doc) -> Path:
    return atomic_write(path, json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n")


def curve_row(point) -> tuple:
    """Split a curve point into the low/unstable/high branch columns.

    A lone stable root goes to ``a_stable_low``; marginal roots are reported
    in the unstable column.
    """
    stable = [s.a for s in point.states if s.stable]
    other = [s.a for s in point.states if not s.stable]
    low = stable[0] if stable else None
    high = stable[-1] if len(stable) > 1 else None
    mid = other[0] if other else None
    return (point.sigma, point.omega_drive, point.freq_hz, low, mid, high, point.branch_count)


def curve_rows(curve: ResonanceCurve, prefix=()) -> list:
    return [tuple(prefix) + curve_row(p) for p in curve.points]


def write_curve(path, curve: ResonanceCurve) -> Path:
    return write_csv(path, CURVE_HEADER, curve_rows(curve))


def write_trace(path, trace: SimTrace) -> Path:
    """Trace CSV; ``x`` is the deviation from the equilibrium angle."""
    dev = trace.deviation
    return write_csv(path, TRACE_HEADER, zip(trace.time, dev, trace.y))


def write_sweep(path, sweep: SweepResult) -> Path:
    rows = [(p.freq_hz, p.omega, p.amplitude, p.dc_offset, p.converged) for p in sweep.points]
    return write_csv(path, SWEEP_HEADER, rows)


def folds_doc(curve: ResonanceCurve) -> list:
    return [
        {"sigma": f.sigma, "omega_tau": f.omega_drive, "freq_hz": f.freq_hz, "a": f.a}
        for f in curve.folds
    ]
