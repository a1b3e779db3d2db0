"""Decomposition functions for mixed-monotone vector fields.

For a field ``h`` whose Jacobian is bounded below by ``a`` on a box, the map

    h_d(x, y) = h(x) + C (x - y),    C = max(0, -a)  (element-wise)

is a decomposition function: ``h_d(x, x) = h(x)``, and
``x -> h(x) + C x`` has Jacobian ``>= a + C >= 0`` so it is increasing in
``x``, while ``-C y`` is decreasing in ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from .errors import DimensionError, EstimationError, InvalidInputError
from .interval import IntervalVector
from .linalg import spectral_norm

#: relative (to the sampled range) and absolute padding applied to grid bounds
INFLATE_REL = 0.05
INFLATE_ABS = 1e-6
#: free Jacobian entries up to which the vertex search is exhaustive
VERTEX_ENUM_MAX = 10


@dataclass(frozen=True)
class JacobianBounds:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.atleast_2d(np.asarray(self.low, dtype=float))
        high = np.atleast_2d(np.asarray(self.high, dtype=float))
        if low.shape != high.shape:
            raise DimensionError(f"bound shapes differ: {low.shape} vs {high.shape}")
        if np.any(low > high):
            raise InvalidInputError("Jacobian lower bound exceeds upper bound")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def shape(self):
        return self.low.shape


@dataclass(frozen=True)
class Decomposition:
    base: tuple
    correction: np.ndarray
    domain: IntervalVector

    def __post_init__(self):
        object.__setattr__(self, "_fn", ex.compile_vector(self.base))

    def __call__(self, x, y) -> np.ndarray:
        return eval_decomposition(self, x, y)

    @property
    def out_dim(self) -> int:
        return len(self.base)


def default_grid(n: int) -> int:
    """Points per axis: 101 for n <= 2, then shrinking to keep ~1e4 samples."""
    if n <= 2:
        return 101
    return max(2, int(round(101 ** (2.0 / n))))


def _grid_points(domain: IntervalVector, grid: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, grid) for lo, hi in zip(domain.lo, domain.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh])


def estimate_jacobian_bounds(
    field: Sequence[ex.Expr],
    domain: IntervalVector,
    grid: int | None = None,
    inflate_rel: float = INFLATE_REL,
    inflate_abs: float = INFLATE_ABS,
) -> JacobianBounds:
    """Sample forward-mode partials on a uniform grid and pad the min/max.

    Sound on the grid points by construction; between grid points the
    padding is a heuristic, not a proof.
    """
    n = domain.dim
    if grid is None:
        grid = default_grid(n)
    if grid < 2:
        raise InvalidInputError("grid needs at least 2 points per axis")
    X = _grid_points(domain, grid)
    m = len(field)
    low = np.empty((m, n))
    high = np.empty((m, n))
    for i, h in enumerate(field):
        for j in range(n):
            d = ex.partial_batch(h, X, j)
            bad = np.flatnonzero(~np.isfinite(d))
            if bad.size:
                raise EstimationError(i, j, X[:, bad[0]])
            low[i, j] = d.min()
            high[i, j] = d.max()
    pad = inflate_rel * (high - low) + inflate_abs
    return JacobianBounds(low - pad, high + pad)


def build_decomposition(
    field: Sequence[ex.Expr], jb: JacobianBounds, domain: IntervalVector
) -> Decomposition:
    if jb.shape != (len(field), domain.dim):
        raise DimensionError(
            f"Jacobian bounds shape {jb.shape} does not match field ({len(field)}, {domain.dim})"
        )
    C = np.maximum(0.0, -jb.low)
    C.flags.writeable = False
    return Decomposition(tuple(field), C, domain)


def eval_decomposition(dec: Decomposition, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return dec._fn(x) + dec.correction @ (x - y)


def decomposition_lipschitz(L_h: float, C) -> float:
    """Lipschitz-like constant of a decomposition: ``L_h + 2 ||C||``."""
    if L_h < 0:
        raise InvalidInputError(f"Lipschitz constant must be nonnegative, got {L_h}")
    return float(L_h + 2.0 * spectral_norm(C))


def estimate_lipschitz(field, domain: IntervalVector, jb: JacobianBounds) -> float:
    """Upper bound on the Lipschitz constant over ``domain``.

    The domain is convex, so ``sup ||J(x)||`` over it bounds the constant.
    Every Jacobian lies in the box ``[low, high]`` and the spectral norm is
    convex, so its maximum over that box sits at a vertex. With few free
    entries the vertices are enumerated; otherwise ``|| max(|low|, |high|) ||``
    is used, which dominates every member of the box.
    """
    free = np.flatnonzero(jb.low != jb.high)
    if free.size <= VERTEX_ENUM_MAX:
        best = 0.0
        base = jb.low.ravel().copy()
        lo, hi = jb.low.ravel()[free], jb.high.ravel()[free]
        for mask in range(2 ** free.size):
            pick = np.array([(mask >> b) & 1 for b in range(free.size)], dtype=bool)
            base[free] = np.where(pick, hi, lo)
            best = max(best, spectral_norm(base.reshape(jb.shape)))
        return best
    M = np.maximum(np.abs(jb.low), np.abs(jb.high))
    return spectral_norm(M)
