"""Observer runs against a truth trace, per-row metrics and CSV I/O.

Floats are written with ``repr`` so a CSV round-trips exactly and repeated
runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .. import observer as obs
from ..errors import DimensionError, SisioError
from ..interval import IntervalVector, width
from ..observer import ObserverState, SystemModel
from .simulate import TruthTrace


def truth_header(n: int, p: int, l: int, m: int) -> list[str]:
    cols = ["k"]
    for name, size in (("x_true", n), ("d_true", p), ("y", l), ("u", m)):
        cols += [f"{name}_{i + 1}" for i in range(size)]
    return cols


def trace_header(n: int, p: int, l: int, m: int) -> list[str]:
    cols = truth_header(n, p, l, m)
    for name, size in (("x_lo", n), ("x_hi", n), ("d_lo", p), ("d_hi", p)):
        cols += [f"{name}_{i + 1}" for i in range(size)]
    return cols + ["width_x", "width_d", "delta_x", "delta_d", "err_x", "err_d", "contained"]


@dataclass(frozen=True)
class TraceRow:
    k: int
    x_lo: np.ndarray
    x_hi: np.ndarray
    d_lo: np.ndarray
    d_hi: np.ndarray
    width_x: float
    width_d: float
    delta_x: float
    delta_d: float
    err_x: float
    err_d: float
    contained: bool
    error: str | None = None


@dataclass
class TracePair:
    truth: TruthTrace
    estimates: list  # ObserverState or None for failed steps
    rows: list
    summary: dict[str, Any] = field(default_factory=dict)


def _error_norm(true, lo, hi) -> float:
    return float(max(np.linalg.norm(true - lo), np.linalg.norm(hi - true)))


def make_row(k: int, s: ObserverState, x_true, d_true) -> TraceRow:
    x_ok = bool(np.all(s.x.lo <= x_true) and np.all(x_true <= s.x.hi))
    d_ok = bool(np.all(s.d.lo <= d_true) and np.all(d_true <= s.d.hi))
    return TraceRow(
        k=k,
        x_lo=s.x.lo, x_hi=s.x.hi, d_lo=s.d.lo, d_hi=s.d.hi,
        width_x=width(s.x), width_d=width(s.d),
        delta_x=float(s.delta_x), delta_d=float(s.delta_d),
        err_x=_error_norm(x_true, s.x.lo, s.x.hi),
        err_d=_error_norm(d_true, s.d.lo, s.d.hi) if d_true.size else 0.0,
        contained=x_ok and d_ok,
    )


def failed_row(k: int, n: int, p: int, message: str) -> TraceRow:
    nan_n, nan_p = np.full(n, np.nan), np.full(p, np.nan)
    nan = float("nan")
    return TraceRow(k, nan_n, nan_n, nan_p, nan_p, nan, nan, nan, nan, nan, nan, False, message)


def summarize(rows: list[TraceRow], model: SystemModel | None = None) -> dict[str, Any]:
    """Aggregate metrics; depends only on the rows (plus model constants if given)."""
    total = len(rows)
    contained = sum(1 for r in rows if r.contained)
    violations = [r.k for r in rows if not r.contained]
    ok_rows = [r for r in rows if r.error is None]

    def _max(attr):
        vals = [getattr(r, attr) for r in ok_rows]
        return float(max(vals)) if vals else float("nan")

    width_viol = [r.k for r in ok_rows if not r.width_x <= r.delta_x or not r.width_d <= r.delta_d]
    out = {
        "steps": total,
        "containment_rate": contained / total if total else float("nan"),
        "violations": len(violations),
        "first_violation": violations[0] if violations else None,
        "step_errors": [{"k": r.k, "error": r.error} for r in rows if r.error is not None],
        "max_width_x": _max("width_x"),
        "max_width_d": _max("width_d"),
        "max_err_x": _max("err_x"),
        "max_err_d": _max("err_d"),
        "width_bound_violations": len(width_viol),
    }
    if model is not None:
        out["script_L"] = model.script_L
        out["L_fd"] = model.L_fd
        out["L_gd"] = model.L_gd
    return out


def run_observer(model: SystemModel, x0: IntervalVector, truth: TruthTrace) -> TracePair:
    """Run the observer along ``truth``.

    A step that raises is recorded as a failed row (NaN bounds, not contained)
    and the observer restarts from the domain box at the next step.
    """
    if truth.x.shape[1] != model.n or truth.y.shape[1] != model.l:
        raise DimensionError("truth trace dimensions do not match the model")
    if truth.d.shape[1] != model.p or truth.u.shape[1] != model.m:
        raise DimensionError("truth trace input dimensions do not match the model")
    rows: list[TraceRow] = []
    states: list[ObserverState | None] = []
    s: ObserverState | None = None
    offset = 0
    for k in range(len(truth)):
        try:
            if s is None:
                start = x0 if k == 0 else model.domain
                offset = k
                s = obs.init(model, start, truth.y[k], truth.u[k])
            else:
                s = obs.step(s, model, truth.u[k - 1], truth.u[k], truth.y[k])
        except SisioError as e:
            s = None
            states.append(None)
            rows.append(failed_row(k, model.n, model.p, f"{type(e).__name__}: {e}"))
            continue
        states.append(s)
        rows.append(make_row(offset + s.k, s, truth.x[k], truth.d[k]))
    summary = summarize(rows, model)
    summary["seed"] = truth.seed
    summary["truth_left_domain"] = truth.left_domain
    return TracePair(truth, states, rows, summary)


def _fmt(v) -> str:
    return repr(float(v))


def _truth_cells(truth: TruthTrace, k: int) -> list[str]:
    cells = [str(k)]
    for arr in (truth.x, truth.d, truth.y, truth.u):
        cells += [_fmt(v) for v in arr[k]]
    return cells


def write_truth_csv(path: str | Path, truth: TruthTrace) -> None:
    n, p, l, m = truth.x.shape[1], truth.d.shape[1], truth.y.shape[1], truth.u.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(truth_header(n, p, l, m))
        for k in range(len(truth)):
            w.writerow(_truth_cells(truth, k))


def write_trace_csv(path: str | Path, pair: TracePair) -> None:
    t = pair.truth
    n, p, l, m = t.x.shape[1], t.d.shape[1], t.y.shape[1], t.u.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(n, p, l, m))
        for k, r in enumerate(pair.rows):
            cells = _truth_cells(t, k)
            for arr in (r.x_lo, r.x_hi, r.d_lo, r.d_hi):
                cells += [_fmt(v) for v in arr]
            cells += [_fmt(v) for v in (r.width_x, r.width_d, r.delta_x, r.delta_d, r.err_x, r.err_d)]
            cells.append("1" if r.contained else "0")
            w.writerow(cells)


def read_truth_csv(path: str | Path, n: int, p: int, l: int, m: int) -> TruthTrace:
    """Read the truth columns of a truth or full trace CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = truth_header(n, p, l, m)
        if header[: len(expected)] != expected:
            raise DimensionError(f"CSV header does not match model dimensions: expected {expected}")
        data = [[float(c) for c in row[: len(expected)]] for row in reader if row]
    A = np.array(data, dtype=float).reshape(-1, len(expected))
    if A.shape[0] == 0:
        raise DimensionError("truth CSV has no rows")
    if not np.array_equal(A[:, 0], np.arange(A.shape[0])):
        raise DimensionError("truth CSV rows must be k = 0, 1, 2, ...")
    i = 1
    parts = []
    for size in (n, p, l, m):
        parts.append(A[:, i : i + size])
        i += size
    return TruthTrace(*parts)


def read_trace_rows(path: str | Path) -> list[dict[str, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def to_jsonable(obj):
    """Convert numpy scalars/arrays to plain Python; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj
