"""Boxes in R^n and the positive/negative matrix split used to bound linear images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyIntersectionError, InvalidInputError

#: inversions up to this size are treated as floating-point noise in ``intersect``
SNAP_TOL = 1e-9


@dataclass(frozen=True)
class IntervalVector:
    """Closed box ``{x : lo <= x <= hi}``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float, ndmin=1)
        hi = np.array(self.hi, dtype=float, ndmin=1)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise DimensionError(f"bounds shapes differ: {lo.shape} vs {hi.shape}")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise InvalidInputError("interval bounds must be finite")
        if (lo > hi).any():
            i = int(np.flatnonzero(lo > hi)[0])
            raise InvalidInputError(f"lo > hi at coordinate {i}: {lo[i]} > {hi[i]}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x) -> IntervalVector:
        x = np.asarray(x, dtype=float)
        return cls(x, x)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def width(self) -> float:
        return width(self)

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.lo - tol <= x) and np.all(x <= self.hi + tol))

    def is_subset(self, other: IntervalVector, tol: float = 0.0) -> bool:
        return bool(np.all(other.lo - tol <= self.lo) and np.all(self.hi <= other.hi + tol))

    def vertices(self) -> np.ndarray:
        """All 2^n corners, one per row."""
        n = self.dim
        corners = np.empty((2**n, n))
        for idx in range(2**n):
            for j in range(n):
                corners[idx, j] = self.hi[j] if (idx >> j) & 1 else self.lo[j]
        return corners

    def __eq__(self, other):
        if not isinstance(other, IntervalVector):
            return NotImplemented
        return np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))

    def __repr__(self):
        return f"IntervalVector(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


@dataclass(frozen=True)
class MatrixSplit:
    """Nonnegative pair with ``a_plus - a_plusplus == A`` and disjoint supports."""

    a_plus: np.ndarray
    a_plusplus: np.ndarray

    @property
    def abs(self) -> np.ndarray:
        return self.a_plus + self.a_plusplus


def split_pos(A) -> MatrixSplit:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    a_plus = np.where(A >= 0, A, 0.0)
    # a_plus - A is exact here: each entry is either 0 - A_ij or A_ij - A_ij
    a_plusplus = a_plus - A
    return MatrixSplit(a_plus, a_plusplus)


def affine_image_bounds(A, b: IntervalVector) -> IntervalVector:
    """Box enclosing ``{A x : b.lo <= x <= b.hi}``.

    Uses ``A = A+ - A++`` with both parts nonnegative, so the lower corner is
    ``A+ lo - A++ hi`` and the upper corner ``A+ hi - A++ lo``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[1] != b.dim:
        raise DimensionError(f"matrix has {A.shape[1]} columns, box has dimension {b.dim}")
    s = split_pos(A)
    lo = s.a_plus @ b.lo - s.a_plusplus @ b.hi
    hi = s.a_plus @ b.hi - s.a_plusplus @ b.lo
    return IntervalVector(lo, hi)


def width(iv: IntervalVector) -> float:
    return float(np.linalg.norm(iv.hi - iv.lo))


def intersect(a: IntervalVector, b: IntervalVector, tol: float = SNAP_TOL) -> IntervalVector:
    """Element-wise overlap of two boxes.

    Coordinates that invert by at most ``tol`` collapse to their midpoint;
    larger inversions raise :class:`EmptyIntersectionError`.
    """
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")
    lo = np.maximum(a.lo, b.lo)
    hi = np.minimum(a.hi, b.hi)
    gap = lo - hi
    bad = np.flatnonzero(gap > tol)
    if bad.size:
        raise EmptyIntersectionError(int(bad[0]))
    thin = gap > 0
    if np.any(thin):
        m = 0.5 * (lo[thin] + hi[thin])
        lo[thin] = m
        hi[thin] = m
    return IntervalVector(lo, hi)


def hull(a: IntervalVector, b: IntervalVector) -> IntervalVector:
    return IntervalVector(np.minimum(a.lo, b.lo), np.maximum(a.hi, b.hi))
