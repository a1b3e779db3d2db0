"""Simultaneous input and state interval observer.

Each step propagates the state box through the decomposition of ``f``,
then bounds the unknown input twice (pseudo-inverse image of the residual
box, and the LP hull of the residual polytope) and keeps the intersection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .errors import (
    DimensionError,
    DomainViolationError,
    EmptyIntersectionError,
    InfeasibleError,
    InvalidInputError,
    ModelInconsistencyError,
    RankDeficiencyError,
)
from .interval import IntervalVector, MatrixSplit, affine_image_bounds, intersect, split_pos, width
from .linalg import pinv, rank, spectral_norm
from .lp import residual_box_hull_full
from .mixed_monotone import (
    Decomposition,
    JacobianBounds,
    build_decomposition,
    decomposition_lipschitz,
    estimate_jacobian_bounds,
    estimate_lipschitz,
)

FUSION_TOL = 1e-9
PINV_TOL = 1e-8
UNIT_L_TOL = 1e-12
# outward rounding, relative to the magnitude of the terms summed into a bound
ROUND_REL = 64 * np.finfo(float).eps


def _matrix(M, rows: int, cols: int, name: str) -> np.ndarray:
    A = np.asarray(M if M is not None else np.zeros((rows, cols)), dtype=float)
    if A.size == 0:
        A = np.zeros((rows, cols))
    A = A.reshape(rows, cols) if A.ndim < 2 and A.size == rows * cols else A
    if A.shape != (rows, cols):
        raise DimensionError(f"{name} has shape {A.shape}, expected ({rows}, {cols})")
    return A


@dataclass(frozen=True)
class SystemModel:
    """Plant data plus everything the observer precomputes from it.

    Use :meth:`create`; it estimates Jacobian bounds and Lipschitz constants
    on ``domain`` unless they are supplied.
    """

    f: tuple
    g: tuple
    B: np.ndarray
    D: np.ndarray
    G: np.ndarray
    H: np.ndarray
    w_lo: np.ndarray
    w_hi: np.ndarray
    v_lo: np.ndarray
    v_hi: np.ndarray
    domain: IntervalVector
    f_bounds: JacobianBounds
    g_bounds: JacobianBounds
    L_f: float
    L_g: float
    # derived
    f_dec: Decomposition = field(repr=False)
    g_dec: Decomposition = field(repr=False)
    J: np.ndarray = field(repr=False)
    G_split: MatrixSplit = field(repr=False)
    J_split: MatrixSplit = field(repr=False)
    K: np.ndarray = field(repr=False)
    L_fd: float = 0.0
    L_gd: float = 0.0
    script_L: float = 0.0
    norm_J_abs: float = 0.0
    norm_J_abs_dv: float = 0.0

    @classmethod
    def create(
        cls,
        f: Sequence,
        g: Sequence,
        *,
        B=None,
        D=None,
        G=None,
        H,
        w_lo,
        w_hi,
        v_lo,
        v_hi,
        domain: IntervalVector,
        f_bounds: JacobianBounds | None = None,
        g_bounds: JacobianBounds | None = None,
        L_f: float | None = None,
        L_g: float | None = None,
        grid: int | None = None,
    ) -> SystemModel:
        n = domain.dim
        f = tuple(ex.parse(e, n) if isinstance(e, str) else e for e in f)
        g = tuple(ex.parse(e, n) if isinstance(e, str) else e for e in g)
        l = len(g)
        if len(f) != n:
            raise DimensionError(f"f has {len(f)} components but the domain has dimension {n}")
        for e in f + g:
            if ex.max_var_index(e) >= n:
                raise DimensionError("expression references a state beyond the domain dimension")
        H = np.atleast_2d(np.asarray(H, dtype=float))
        if H.shape[0] != l:
            if H.size == 0:
                H = np.zeros((l, 0))
            else:
                raise DimensionError(f"H has {H.shape[0]} rows, g has {l} components")
        p = H.shape[1]
        B = np.asarray(B if B is not None else np.zeros((n, 0)), dtype=float)
        m = B.shape[1] if B.ndim == 2 else (1 if B.size == n and B.size else 0)
        B = _matrix(B, n, m, "B")
        D = _matrix(D, l, m, "D")
        G = _matrix(G, n, p, "G")
        if not (n >= l >= 1 and l >= p >= 0):
            raise DimensionError(f"need n >= l >= 1 and l >= p >= 0, got n={n}, l={l}, p={p}")
        if rank(H) != p:
            raise RankDeficiencyError(f"H must have full column rank {p}, has rank {rank(H)}")
        if p and rank(np.vstack([G, H])) != p:
            raise RankDeficiencyError("rank([G; H]) must equal p")
        w_lo, w_hi = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (w_lo, w_hi))
        v_lo, v_hi = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (v_lo, v_hi))
        w_lo, w_hi = np.broadcast_to(w_lo, (n,)).copy(), np.broadcast_to(w_hi, (n,)).copy()
        v_lo, v_hi = np.broadcast_to(v_lo, (l,)).copy(), np.broadcast_to(v_hi, (l,)).copy()
        if np.any(w_lo > w_hi) or np.any(v_lo > v_hi):
            raise InvalidInputError("noise bounds must satisfy lo <= hi")

        if f_bounds is None:
            f_bounds = estimate_jacobian_bounds(f, domain, grid)
        if g_bounds is None:
            g_bounds = estimate_jacobian_bounds(g, domain, grid)
        if L_f is None:
            L_f = estimate_lipschitz(f, domain, f_bounds)
        if L_g is None:
            L_g = estimate_lipschitz(g, domain, g_bounds)
        f_dec = build_decomposition(f, f_bounds, domain)
        g_dec = build_decomposition(g, g_bounds, domain)

        J = pinv(H) if p else np.zeros((0, l))
        if p and not np.allclose(J @ H, np.eye(p), atol=PINV_TOL, rtol=0.0):
            raise RankDeficiencyError("pseudo-inverse does not satisfy J H = I")
        G_split = split_pos(G) if p else MatrixSplit(np.zeros((n, 0)), np.zeros((n, 0)))
        J_split = split_pos(J) if p else MatrixSplit(np.zeros((0, l)), np.zeros((0, l)))
        K = G_split.abs @ J_split.abs
        L_fd = decomposition_lipschitz(L_f, f_dec.correction)
        L_gd = decomposition_lipschitz(L_g, g_dec.correction)
        script_L = L_fd + L_gd * spectral_norm(K)
        return cls(
            f, g, B, D, G, H, w_lo, w_hi, v_lo, v_hi, domain, f_bounds, g_bounds,
            float(L_f), float(L_g), f_dec, g_dec, J, G_split, J_split, K,
            L_fd, L_gd, float(script_L),
            spectral_norm(J_split.abs), float(np.linalg.norm(J_split.abs @ (v_hi - v_lo))),
        )

    def with_matrices(self, **changes) -> SystemModel:
        """Rebuild with some plant matrices or noise bounds replaced (bounds reused)."""
        kw = dict(
            B=self.B, D=self.D, G=self.G, H=self.H, w_lo=self.w_lo, w_hi=self.w_hi,
            v_lo=self.v_lo, v_hi=self.v_hi, domain=self.domain, f_bounds=self.f_bounds,
            g_bounds=self.g_bounds, L_f=self.L_f, L_g=self.L_g,
        )
        kw.update(changes)
        return SystemModel.create(self.f, self.g, **kw)

    @property
    def n(self) -> int:
        return self.domain.dim

    @property
    def l(self) -> int:
        return len(self.g)

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.H.shape[1]

    @property
    def delta_w(self) -> np.ndarray:
        return self.w_hi - self.w_lo

    @property
    def delta_v(self) -> np.ndarray:
        return self.v_hi - self.v_lo

    @property
    def delta_z(self) -> np.ndarray:
        return self.delta_w + self.K @ self.delta_v

    @property
    def J_abs(self) -> np.ndarray:
        return self.J_split.abs


@dataclass(frozen=True)
class ObserverState:
    k: int
    x: IntervalVector
    d: IntervalVector
    delta_x: float
    delta_d: float
    delta_x0: float
    r: IntervalVector | None = None
    d1: IntervalVector | None = None
    d2: IntervalVector | None = None
    # per coordinate: which estimate set each fused bound ("pinv" or "lp")
    d_lo_source: tuple = ()
    d_hi_source: tuple = ()
    polytope_empty: bool = False


def _ordered(lo, hi, what: str) -> IntervalVector:
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    gap = lo - hi
    if np.any(gap > FUSION_TOL):
        i = int(np.flatnonzero(gap > FUSION_TOL)[0])
        raise ModelInconsistencyError(
            f"{what} bounds inverted at coordinate {i}: lo={lo[i]!r} > hi={hi[i]!r}"
        )
    thin = gap > 0
    mid = 0.5 * (lo + hi)
    lo[thin] = mid[thin]
    hi[thin] = mid[thin]
    return IntervalVector(lo, hi)


def _widen(lo, hi, scale):
    pad = ROUND_REL * scale
    return lo - pad, hi + pad


def _mag(iv: IntervalVector) -> np.ndarray:
    return np.maximum(np.abs(iv.lo), np.abs(iv.hi))


def width_bound_x(model: SystemModel, delta_x0: float, k: int) -> float:
    """Closed-form state width bound after ``k`` steps."""
    L = model.script_L
    dz = float(np.linalg.norm(model.delta_z))
    if abs(L - 1.0) < UNIT_L_TOL:
        return delta_x0 + k * dz
    with np.errstate(over="ignore"):
        Lk = np.float64(L) ** k
    if np.isinf(Lk):
        return float("inf")
    with np.errstate(over="ignore"):
        return float(Lk * delta_x0 + dz * (1.0 - Lk) / (1.0 - L))


def width_bound_d(model: SystemModel, delta_x: float) -> float:
    return float(model.norm_J_abs * model.L_gd * delta_x + model.norm_J_abs_dv)


def residual_bounds(s: ObserverState | IntervalVector, model: SystemModel, y, u) -> IntervalVector:
    x = s.x if isinstance(s, ObserverState) else s
    y = np.atleast_1d(np.asarray(y, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float)) if model.m else np.zeros(0)
    base = y - model.D @ u
    g_lo, g_hi = model.g_dec(x.lo, x.hi), model.g_dec(x.hi, x.lo)
    hi = base - g_lo - model.v_lo
    lo = base - g_hi - model.v_hi
    scale = (np.abs(y) + np.abs(model.D) @ np.abs(u) + np.maximum(np.abs(g_lo), np.abs(g_hi))
             + np.maximum(np.abs(model.v_lo), np.abs(model.v_hi)))
    return _ordered(*_widen(lo, hi, scale), "residual")


def input_estimate(s, model: SystemModel, r: IntervalVector):
    """Fuse pseudo-inverse and LP bounds; returns ``(d, d1, d2, empty_flag, lo_src, hi_src)``."""
    if model.p == 0:
        d1 = affine_image_bounds(model.J, r)
        return d1, d1, d1, False, (), ()
    scale = model.J_abs @ _mag(r)
    d1 = affine_image_bounds(model.J, r)
    d1 = IntervalVector(*_widen(d1.lo, d1.hi, scale))
    empty = False
    try:
        d2 = residual_box_hull_full(model.H, r).box
        d2 = IntervalVector(*_widen(d2.lo, d2.hi, scale))
    except InfeasibleError:
        d2 = None
        empty = True
    if d2 is None:
        d = d1
        lo_src = hi_src = ("pinv",) * model.p
    else:
        lo = np.maximum(d1.lo, d2.lo)
        hi = np.minimum(d1.hi, d2.hi)
        lo_src = tuple("lp" if b > a else "pinv" for a, b in zip(d1.lo, d2.lo))
        hi_src = tuple("lp" if b < a else "pinv" for a, b in zip(d1.hi, d2.hi))
        d = _ordered(lo, hi, "input")
    return d, d1, d2, empty, lo_src, hi_src


def _estimate_inputs(model, x, y, u, k, delta_x, delta_x0) -> ObserverState:
    r = residual_bounds(x, model, y, u)
    d, d1, d2, empty, lo_src, hi_src = input_estimate(None, model, r)
    return ObserverState(
        k=k, x=x, d=d, delta_x=delta_x, delta_d=width_bound_d(model, delta_x),
        delta_x0=delta_x0, r=r, d1=d1, d2=d2, d_lo_source=lo_src, d_hi_source=hi_src,
        polytope_empty=empty,
    )


def init(model: SystemModel, x0: IntervalVector, y0, u0=()) -> ObserverState:
    if x0.dim != model.n:
        raise DimensionError(f"x0 has dimension {x0.dim}, model has n={model.n}")
    if not x0.is_subset(model.domain):
        raise DomainViolationError("initial box is not inside the model domain")
    dx0 = width(x0)
    return _estimate_inputs(model, x0, y0, u0, 0, dx0, dx0)


def state_propagate(s: ObserverState, model: SystemModel, u_prev=()) -> IntervalVector:
    x, d = s.x, s.d
    u = np.atleast_1d(np.asarray(u_prev, dtype=float)) if model.m else np.zeros(0)
    Bu = model.B @ u
    Gp, Gm = model.G_split.a_plus, model.G_split.a_plusplus
    hi = model.f_dec(x.hi, x.lo) + Bu + Gp @ d.hi - Gm @ d.lo + model.w_hi
    lo = model.f_dec(x.lo, x.hi) + Bu + Gp @ d.lo - Gm @ d.hi + model.w_lo
    scale = (np.maximum(np.abs(hi), np.abs(lo)) + np.abs(model.B) @ np.abs(u)
             + np.abs(model.G) @ _mag(d) + np.maximum(np.abs(model.w_lo), np.abs(model.w_hi)))
    prop = _ordered(*_widen(lo, hi, scale), "state")
    try:
        return intersect(prop, model.domain)
    except EmptyIntersectionError as e:
        raise DomainViolationError(
            f"propagated state box left the domain at coordinate {e.index}"
        ) from e


def step(s: ObserverState, model: SystemModel, u_prev, u, y) -> ObserverState:
    x = state_propagate(s, model, u_prev)
    k = s.k + 1
    dx = width_bound_x(model, s.delta_x0, k)
    return _estimate_inputs(model, x, y, u, k, dx, s.delta_x0)


def run(model: SystemModel, x0: IntervalVector, ys, us) -> list[ObserverState]:
    """Run the observer over measurement/input sequences of equal length."""
    ys = list(ys)
    us = list(us)
    if len(ys) != len(us):
        raise DimensionError("measurement and input sequences differ in length")
    states = [init(model, x0, ys[0], us[0])]
    for k in range(1, len(ys)):
        states.append(step(states[-1], model, us[k - 1], us[k], ys[k]))
    return states
