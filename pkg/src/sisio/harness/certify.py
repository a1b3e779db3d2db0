"""Stability report for a configured model."""

from __future__ import annotations

from typing import Any

import numpy as np

from .. import stability as st
from ..observer import SystemModel
from .trace import to_jsonable

REPORT_VERSION = 1


def certify(model: SystemModel, delta_x0=None) -> dict[str, Any]:
    """Run all three condition checks and the steady-state width limits.

    ``delta_x0`` is the initial width vector; defaults to the domain widths.
    """
    if delta_x0 is None:
        delta_x0 = model.domain.hi - model.domain.lo
    c1 = st.check_condition_i(model)
    c2 = st.check_condition_ii(model)
    c3 = st.check_condition_iii(model)
    P = np.asarray(c3.P) if c3.proof_mode_verdict == "holds" else None
    limits = st.width_limits(model, delta_x0, P)
    report = {
        "version": REPORT_VERSION,
        "constants": {
            "L_f": model.L_f,
            "L_g": model.L_g,
            "L_fd": model.L_fd,
            "L_gd": model.L_gd,
            "script_L": model.script_L,
            "norm_K": c1.norm_K,
            "lambda_max_KtK": c1.lambda_max_KtK,
            "C_f": model.f_dec.correction,
            "C_g": model.g_dec.correction,
            "K": model.K,
            "J": model.J,
        },
        "certificates": [c.to_dict() for c in (c1, c2, c3)],
        "width_limits": limits.to_dict(),
    }
    return to_jsonable(report)


def certificates_from_report(report: dict) -> list[st.StabilityCertificate]:
    return [st.StabilityCertificate.from_dict(d) for d in report["certificates"]]
