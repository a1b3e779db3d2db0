"""Small dense symmetric eigen-solves used by norms and definiteness tests."""

from __future__ import annotations

import numpy as np

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


def jacobi_eigh(M, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues ascending, eigenvectors as columns)``. The input is
    symmetrized by averaging. Iteration stops once the off-diagonal Frobenius
    norm is below ``tol`` times the matrix Frobenius norm (absolute ``tol``
    for the zero matrix).
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    # work at unit magnitude so squared entries neither underflow nor overflow
    amax = float(np.max(np.abs(A))) if A.size else 0.0
    if amax > 0.0:
        A = A / amax
    V = np.eye(n)
    scale = np.linalg.norm(A) or 1.0
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A[offdiag] ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                # negligible against both diagonal entries: zero it instead of rotating
                g = 100.0 * abs(apq)
                if apq == 0.0 or (abs(A[p, p]) + g == abs(A[p, p]) and abs(A[q, q]) + g == abs(A[q, q])):
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    # theta^2 would overflow; t ~ 1/(2 theta)
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- R^T A R with R the (p, q) plane rotation
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp = V[:, p].copy()
                Vq = V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    w = np.diag(A) * (amax if amax > 0.0 else 1.0)
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def eigvalsh(M) -> np.ndarray:
    return jacobi_eigh(M)[0]


def lambda_max(M) -> float:
    return float(jacobi_eigh(M)[0][-1])


def lambda_min(M) -> float:
    return float(jacobi_eigh(M)[0][0])


def spectral_norm(M) -> float:
    """Largest singular value, via the top eigenvalue of ``M^T M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    lam = lambda_max(M.T @ M)
    return float(np.sqrt(max(lam, 0.0)))


def pinv(H) -> np.ndarray:
    return np.linalg.pinv(np.atleast_2d(np.asarray(H, dtype=float)))


def rank(M, tol: float | None = None) -> int:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    return int(np.linalg.matrix_rank(M, tol=tol))
