"""Stability certificates for the interval-width dynamics.

Three sufficient conditions are checked. The matrix inequalities in
conditions (ii) and (iii), taken literally, contain a positive definite
diagonal block and can never be negative semidefinite; each certificate
therefore carries both the literal verdict and a verdict for the bound the
Lyapunov argument actually uses, labeled separately.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Literal

import numpy as np

from .errors import InvalidInputError
from .linalg import jacobi_eigh, lambda_max, lambda_min, spectral_norm
from .observer import SystemModel

Verdict = Literal["holds", "fails", "structurally-infeasible", "undefined"]

NSD_TOL = 1e-10
SYM_TOL = 1e-10
P_GRID = np.logspace(-3, 3, 121)
GAMMA_GRID = np.logspace(-6, 3, 121)


@dataclass
class StabilityCertificate:
    condition: str
    verdict: Verdict
    script_L: float | None = None
    norm_K: float | None = None
    lambda_max_KtK: float | None = None
    F: list | None = None
    P: list | None = None
    Gamma: list | None = None
    worst_block_eigenvalue: float | None = None
    proof_mode_verdict: Verdict | None = None
    diagnostics: list[str] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> StabilityCertificate:
        return cls(**data)


def nsd_test(M, tol: float = NSD_TOL) -> tuple[bool, float]:
    """``(lambda_max(M) <= tol, lambda_max(M))`` using Jacobi rotations."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return True, float("-inf")
    lam = lambda_max(M)
    return lam <= tol, lam


def gain_matrix(model_or_G, H=None) -> np.ndarray:
    """``K = |G| |H^+|`` (entry-wise absolute values)."""
    if isinstance(model_or_G, SystemModel):
        return model_or_G.K
    G = np.atleast_2d(np.asarray(model_or_G, dtype=float))
    J = np.linalg.pinv(np.atleast_2d(np.asarray(H, dtype=float)))
    return np.abs(G) @ np.abs(J)


def contraction_constant(L_fd: float, L_gd: float, K) -> float:
    return float(L_fd + L_gd * spectral_norm(K))


def check_condition_i(model: SystemModel | None = None, *, L_fd=None, L_gd=None, K=None) -> StabilityCertificate:
    if model is not None:
        L_fd, L_gd, K = model.L_fd, model.L_gd, model.K
    nK = spectral_norm(K)
    L = float(L_fd + L_gd * nK)
    holds = L < 1.0
    diag = [f"L = L_fd + L_gd*||K|| = {L_fd:.6g} + {L_gd:.6g}*{nK:.6g} = {L:.6g}"]
    if not holds:
        diag.append("contraction constant is not below 1")
    return StabilityCertificate(
        condition="i",
        verdict="holds" if holds else "fails",
        script_L=L,
        norm_K=nK,
        lambda_max_KtK=lambda_max(np.atleast_2d(K).T @ np.atleast_2d(K)) if np.size(K) else 0.0,
        diagnostics=diag,
        extra={"L_fd": float(L_fd), "L_gd": float(L_gd)},
    )


def condition_ii_matrix(L_fd: float, L_gd: float, K) -> np.ndarray:
    """Symmetric completion of the 5x5 block matrix; block sizes n, l, n, n, l."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    n, l = K.shape
    KtK = K.T @ K
    lam = lambda_max(KtK) if K.size else 0.0
    F = (L_fd**2 + L_gd**2 * lam - 1.0) * np.eye(n)
    Zn, Znl, Zll = np.zeros((n, n)), np.zeros((n, l)), np.zeros((l, l))
    I = np.eye(n)
    upper = [
        [F, Znl, Zn, Zn, Znl],
        [None, KtK, K.T, K.T, KtK],
        [None, None, I, I, K],
        [None, None, None, Zn, K],
        [None, None, None, None, Zll],
    ]
    sizes = [n, l, n, n, l]
    off = np.concatenate([[0], np.cumsum(sizes)])
    M = np.zeros((off[-1], off[-1]))
    for i in range(5):
        for j in range(i, 5):
            blk = upper[i][j]
            M[off[i] : off[i + 1], off[j] : off[j + 1]] = blk
            M[off[j] : off[j + 1], off[i] : off[i + 1]] = blk.T
    return M


def check_condition_ii(model: SystemModel | None = None, *, L_fd=None, L_gd=None, K=None) -> StabilityCertificate:
    if model is not None:
        L_fd, L_gd, K = model.L_fd, model.L_gd, model.K
    K = np.atleast_2d(np.asarray(K, dtype=float))
    n, l = K.shape
    M = condition_ii_matrix(L_fd, L_gd, K)
    lam_KtK = lambda_max(K.T @ K) if K.size else 0.0
    F = (L_fd**2 + L_gd**2 * lam_KtK - 1.0) * np.eye(n)
    nsd, lam_M = nsd_test(M)
    diag_max = float(np.max(np.diag(M)))
    diag = [
        f"assembled matrix is {M.shape[0]}x{M.shape[0]}; lambda_max = {lam_M:.6g}",
        "block (3,3) is the identity, so the matrix has diagonal entry 1 > 0; "
        "no negative semidefinite matrix has a positive diagonal entry",
    ]
    nK = spectral_norm(K)
    # Lyapunov decrease for V = |s|^2 with the disturbance removed:
    # |Df + K Dg|^2 <= (L_fd + L_gd ||K||)^2 |s|^2 by Cauchy-Schwarz on the cross term
    homog = (L_fd + L_gd * nK) ** 2 - 1.0
    proof = "holds" if homog < 0 else "fails"
    diag.append(
        f"proof mode: (L_fd + L_gd*||K||)^2 - 1 = {homog:.6g} "
        "(F block plus Cauchy-Schwarz bound on the 2 Df^T K Dg cross term; "
        "noise terms treated as a bounded disturbance)"
    )
    diag.append(f"F = ({L_fd:.6g}^2 + {L_gd:.6g}^2 * {lam_KtK:.6g} - 1) I = {F[0, 0] if n else 0.0:.6g} I")
    return StabilityCertificate(
        condition="ii",
        verdict="structurally-infeasible" if diag_max > 0 else ("holds" if nsd else "fails"),
        script_L=float(L_fd + L_gd * nK),
        norm_K=nK,
        lambda_max_KtK=lam_KtK,
        F=F.tolist(),
        worst_block_eigenvalue=lam_M,
        proof_mode_verdict=proof,
        diagnostics=diag,
        extra={"matrix_max_diagonal": diag_max, "matrix_nsd": bool(nsd)},
    )


def condition_iii_matrix(P, Gamma, L: float) -> np.ndarray:
    """The literal 3x3 block LMI with ``L I - P`` in the middle block."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Gm = np.atleast_2d(np.asarray(Gamma, dtype=float))
    n = P.shape[0]
    I, Z = np.eye(n), np.zeros((n, n))
    return np.block([[P + Gm - I, Z, P], [Z, L * I - P, Z], [P, Z, P]])


def _proof_blocks(P, Gamma, L: float):
    n = P.shape[0]
    I = np.eye(n)
    ok1, lam1 = nsd_test(P + Gamma - I)
    ok2, lam2 = nsd_test(L**2 * I - P)
    return ok1 and ok2, lam1, lam2


def check_condition_iii(
    model: SystemModel | None = None,
    candidate: tuple | None = None,
    *,
    script_L: float | None = None,
    n: int | None = None,
    p_grid=P_GRID,
    gamma_grid=GAMMA_GRID,
) -> StabilityCertificate:
    """Check condition (iii) for a supplied ``(P, Gamma)`` or search ``P = p I, Gamma = g I``.

    Search order is row-major over ``(p, gamma)``; the first candidate whose
    proof-mode blocks are both NSD wins.
    """
    if model is not None:
        script_L, n = model.script_L, model.n
    L = float(script_L)
    diag: list[str] = []
    searched = candidate is None
    if candidate is not None:
        P = np.atleast_2d(np.asarray(candidate[0], dtype=float))
        Gm = np.atleast_2d(np.asarray(candidate[1], dtype=float))
        n = P.shape[0]
        if not np.allclose(P, P.T, atol=SYM_TOL) or lambda_min(P) <= 0:
            raise InvalidInputError("candidate P must be symmetric positive definite")
        if not np.allclose(Gm, Gm.T, atol=SYM_TOL) or lambda_min(Gm) < -NSD_TOL:
            raise InvalidInputError("candidate Gamma must be symmetric positive semidefinite")
        ok, lam1, lam2 = _proof_blocks(P, Gm, L)
    else:
        I = np.eye(n)
        ok = False
        P, Gm = None, None
        best = None
        for pv in p_grid:
            for gv in gamma_grid:
                o, l1, l2 = _proof_blocks(pv * I, gv * I, L)
                score = max(l1, l2)
                if best is None or score < best[0]:
                    best = (score, pv, gv, l1, l2)
                if o:
                    ok, P, Gm, lam1, lam2 = True, pv * I, gv * I, l1, l2
                    break
            if ok:
                break
        if not ok:
            _, pv, gv, lam1, lam2 = best
            P, Gm = pv * I, gv * I
            diag.append(
                f"no scaled-identity candidate on the grid satisfies proof mode; "
                f"closest P = {pv:.6g} I, Gamma = {gv:.6g} I"
            )
    M = condition_iii_matrix(P, Gm, L)
    nsd, lam_M = nsd_test(M)
    lam_P = lambda_min(P)
    diag.insert(
        0,
        f"literal LMI: block (3,3) equals P with lambda_min(P) = {lam_P:.6g} > 0, "
        f"so the matrix is never negative semidefinite (lambda_max = {lam_M:.6g})",
    )
    diag.append(
        f"proof mode: lambda_max(P + Gamma - I) = {lam1:.6g}, "
        f"lambda_max(L^2 I - P) = {lam2:.6g}; the Delta z terms are treated as a bounded disturbance"
    )
    return StabilityCertificate(
        condition="iii",
        verdict="structurally-infeasible" if lam_P > 0 else ("holds" if nsd else "fails"),
        script_L=L,
        P=P.tolist(),
        Gamma=Gm.tolist(),
        worst_block_eigenvalue=lam_M,
        proof_mode_verdict="holds" if ok else "fails",
        diagnostics=diag,
        extra={
            "searched": searched,
            "proof_block_1_lambda_max": float(lam1),
            "proof_block_2_lambda_max": float(lam2),
            "literal_lmi_nsd": bool(nsd),
        },
    )


@dataclass
class WidthLimits:
    script_L: float
    recursion_limit_x: float | None  # ||dz|| / (1 - L)
    printed_limit_x: float | None  # ||dz|| * L / (1 - L)
    recursion_limit_d: float | None
    printed_limit_d: float | None
    uniform_x: float | None = None
    uniform_d: float | None = None
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def width_limits(model: SystemModel, delta_x0, P=None) -> WidthLimits:
    """Steady-state width limits (two labelings) and optional uniform bounds.

    ``delta_x0`` is the initial width vector ``x0_hi - x0_lo`` (a scalar is
    accepted when no ``P`` is given).
    """
    L = model.script_L
    dz = float(np.linalg.norm(model.delta_z))
    Ja = model.J_abs
    nJ = spectral_norm(Ja)
    jv = float(np.linalg.norm(Ja @ model.delta_v))

    def G_map(x):
        return nJ * model.L_gd * x + jv

    return steady_state_limits(L, dz, G_map, delta_x0, P)


def steady_state_limits(L, dz, G_map, delta_x0, P=None) -> WidthLimits:
    diag = []
    if L < 1.0:
        rec = dz / (1.0 - L)
        printed = dz * L / (1.0 - L)
        out = WidthLimits(L, rec, printed, G_map(rec), G_map(printed))
        diag.append(
            "recursion_limit is the k -> infinity limit of the per-step bound; "
            "printed_limit carries the extra factor L"
        )
    else:
        out = WidthLimits(L, None, None, None, None)
        diag.append(f"L = {L:.6g} >= 1: steady-state widths undefined")
    if P is not None:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        dx0 = np.atleast_1d(np.asarray(delta_x0, dtype=float))
        w0 = float(np.linalg.norm(dx0))
        dP = float(np.sqrt(dx0 @ P @ dx0 / lambda_min(P)))
        out.uniform_x = min(w0, dP)
        out.uniform_d = min(G_map(w0), G_map(dP))
    out.diagnostics = diag
    return out
