"""Dense two-phase tableau simplex and the residual-polytope box hull.

Problems have the form ``max/min c^T x  s.t.  A x <= b`` with ``x`` free.
Free variables are split as ``x = x+ - x-`` and every row gets a slack, so
the tableau works over nonnegative variables only. Bland's rule (smallest
eligible index for both entering and leaving) rules out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DimensionError, InfeasibleError, InvalidInputError
from .interval import IntervalVector

PIVOT_TOL = 1e-9
RHS_INFLATE = 1e-7

Status = Literal["optimal", "infeasible", "unbounded"]


@dataclass(frozen=True)
class LinearProgram:
    objective: np.ndarray
    A: np.ndarray
    rhs: np.ndarray
    sense: Literal["max", "min"] = "max"

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 1:
            A = A.reshape(-1, c.size) if A.size else np.zeros((0, c.size))
        b = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        if A.shape != (b.size, c.size):
            raise DimensionError(f"A is {A.shape}, expected ({b.size}, {c.size})")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidInputError("linear program has non-finite data")
        if self.sense not in ("max", "min"):
            raise InvalidInputError(f"unknown sense {self.sense!r}")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "rhs", b)


@dataclass(frozen=True)
class LpOutcome:
    status: Status
    optimum: float | None = None
    x: np.ndarray | None = None
    iterations: int = 0


class _Tableau:
    """Maximization tableau; row 0 holds reduced costs ``c_j - z_j``."""

    def __init__(self, T: np.ndarray, basis: list[int], tol: float):
        self.T = T
        self.basis = basis
        self.tol = tol
        self.iterations = 0

    def copy(self) -> _Tableau:
        t = _Tableau(self.T.copy(), list(self.basis), self.tol)
        t.iterations = self.iterations
        return t

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        self.basis[row - 1] = col
        self.iterations += 1

    def run(self, allowed: np.ndarray) -> str:
        T = self.T
        while True:
            cand = np.nonzero((T[0, :-1] > self.tol) & allowed)[0]
            if cand.size == 0:
                return "optimal"
            col = int(cand[0])
            column = T[1:, col]
            rows = np.nonzero(column > self.tol)[0]
            if rows.size == 0:
                return "unbounded"
            ratios = T[1 + rows, -1] / column[rows]
            best = ratios.min()
            # Bland: among minimal ratios, leave with the smallest basic index
            ties = rows[ratios <= best + self.tol * max(1.0, abs(best))]
            leave = min(ties, key=lambda r: self.basis[r])
            self.pivot(int(leave) + 1, col)


@dataclass
class _Feasible:
    tab: _Tableau
    allowed: np.ndarray
    p: int
    ncol: int


def _phase1(A: np.ndarray, b: np.ndarray, tol: float) -> _Feasible | None:
    """Tableau at a basic feasible point of ``{A (x+ - x-) + s = b}``, or None if empty."""
    m, p = A.shape
    # columns: x+ (p), x- (p), slacks (m), artificials (one per negative rhs row)
    sign = np.where(b < 0, -1.0, 1.0)
    art_rows = np.flatnonzero(b < 0)
    n_art = art_rows.size
    n_struct = 2 * p + m
    ncol = n_struct + n_art
    T = np.zeros((m + 1, ncol + 1))
    T[1:, :p] = A * sign[:, None]
    T[1:, p : 2 * p] = -A * sign[:, None]
    T[1:, 2 * p : n_struct] = np.diag(sign)
    T[1:, -1] = b * sign
    basis = [2 * p + i for i in range(m)]
    for k, r in enumerate(art_rows):
        T[1 + r, n_struct + k] = 1.0
        basis[r] = n_struct + k

    tab = _Tableau(T, basis, tol)
    allowed = np.ones(ncol, dtype=bool)
    if n_art:
        # maximize -(sum of artificials)
        T[0, n_struct:ncol] = -1.0
        T[0] += T[1 + art_rows].sum(axis=0)
        tab.run(allowed)
        scale = 1.0 + np.max(np.abs(b))
        if T[0, -1] > tol * scale:
            return None
        # drive remaining zero-level artificials out of the basis
        for r in range(m):
            if tab.basis[r] >= n_struct:
                nz = np.flatnonzero(np.abs(T[1 + r, :n_struct]) > tol)
                if nz.size:
                    tab.pivot(1 + r, int(nz[0]))
        allowed[n_struct:] = False
    return _Feasible(tab, allowed, p, ncol)


def _phase2(feas: _Feasible, c: np.ndarray):
    tab = feas.tab.copy()
    T, p, ncol = tab.T, feas.p, feas.ncol
    cost = np.zeros(ncol)
    cost[:p] = c
    cost[p : 2 * p] = -c
    T[0, :] = 0.0
    T[0, :ncol] = cost
    cb = cost[tab.basis]
    T[0] -= cb @ T[1:]
    status = tab.run(feas.allowed)
    if status == "unbounded":
        return "unbounded", None, tab.iterations
    z = np.zeros(ncol)
    z[tab.basis] = T[1:, -1]
    return "optimal", z[:p] - z[p : 2 * p], tab.iterations


def lp_solve(lp: LinearProgram, tol: float = PIVOT_TOL) -> LpOutcome:
    c = lp.objective if lp.sense == "max" else -lp.objective
    A, b = lp.A, lp.rhs
    m, p = A.shape
    if m == 0:
        if np.any(c != 0):
            return LpOutcome("unbounded")
        x = np.zeros(p)
        return LpOutcome("optimal", float(lp.objective @ x), x)
    feas = _phase1(A, b, tol)
    if feas is None:
        return LpOutcome("infeasible")
    status, x, iters = _phase2(feas, c)
    if status == "unbounded":
        return LpOutcome("unbounded", iterations=iters)
    return LpOutcome("optimal", float(lp.objective @ x), x, iters)


@dataclass(frozen=True)
class HullResult:
    box: IntervalVector
    argmin: np.ndarray  # row i minimizes coordinate i
    argmax: np.ndarray  # row i maximizes coordinate i
    inflated: bool = False


def _hull_once(H: np.ndarray, lo: np.ndarray, hi: np.ndarray, tol: float = PIVOT_TOL):
    l, p = H.shape
    A = np.vstack([H, -H])
    b = np.concatenate([hi, -lo])
    feas = _phase1(A, b, tol)
    if feas is None:
        return None
    box_lo = np.empty(p)
    box_hi = np.empty(p)
    argmin = np.empty((p, p))
    argmax = np.empty((p, p))
    for i in range(p):
        e = np.zeros(p)
        e[i] = 1.0
        for sign, vals, args in ((1.0, box_hi, argmax), (-1.0, box_lo, argmin)):
            status, x, _ = _phase2(feas, sign * e)
            if status == "unbounded":
                raise RuntimeError("residual polytope unbounded: H lacks full column rank")
            vals[i] = x[i]
            args[i] = x
    return box_lo, box_hi, argmin, argmax


def residual_box_hull_full(H, r: IntervalVector) -> HullResult:
    """Tightest box around ``{d : r.lo <= H d <= r.hi}`` plus the LP optimizers."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape[0] != r.dim:
        raise DimensionError(f"H has {H.shape[0]} rows, residual box has dimension {r.dim}")
    res = _hull_once(H, r.lo, r.hi)
    inflated = False
    if res is None:
        res = _hull_once(H, r.lo - RHS_INFLATE, r.hi + RHS_INFLATE)
        inflated = True
        if res is None:
            raise InfeasibleError("residual polytope is empty")
    box_lo, box_hi, argmin, argmax = res
    # LP round-off may leave lo a hair above hi for thin polytopes
    box_hi = np.maximum(box_hi, box_lo)
    return HullResult(IntervalVector(box_lo, box_hi), argmin, argmax, inflated)


def residual_box_hull(H, r: IntervalVector) -> IntervalVector:
    return residual_box_hull_full(H, r).box
