# qwell/modules/spectral_core/hypotheses.py
"""Finite-window checks of the coupling hypotheses. Every number here is an estimate on
k <= K_max, never a proof."""
import logging
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, Field

from qwell.modules.spectral_core.coupling import CouplingData

logger = logging.getLogger("Qwell.Hypotheses")

SATISFIED = "satisfied"
VIOLATED = "violated"
DEGENERATE = "degenerate"


class DecayReport(BaseModel):
    c_hat: float = Field(..., description="min |<mu phi_j, phi_k>| k^3 over the window")
    argmin: Tuple[int, int] = Field(..., description="(j, k) attaining c_hat")
    window: Tuple[int, int] = Field(..., description="(N, K_max) scanned")
    threshold: float
    verdict: str
    label: str = "finite-window estimate"


class HypothesesReport(BaseModel):
    decay: DecayReport
    scalars: Dict[str, float]
    diag: List[float]
    grad_diag: List[float]
    verdicts: Dict[str, str]


def check_hypothesis_mu(data: CouplingData, N: int, threshold: float = 1e-8) -> DecayReport:
    """c_hat := min_{j<=N, k<=K_max} |<mu phi_j, phi_k>| k^3 with its arg-min."""
    K = data.K_max
    k3 = np.arange(1, K + 1, dtype=float) ** 3
    scaled = np.abs(data.mu_mat[:N, :]) * k3[None, :]
    j0, k0 = np.unravel_index(int(np.argmin(scaled)), scaled.shape)
    c_hat = float(scaled[j0, k0])
    if not np.any(np.abs(data.mu_mat) > threshold):
        verdict = DEGENERATE
    elif c_hat <= threshold:
        verdict = VIOLATED
    else:
        verdict = SATISFIED
    if verdict != SATISFIED:
        logger.warning(f"⚠️ Coupling decay hypothesis numerically {verdict} on window k<={K}: c_hat={c_hat:.3e} at {(j0 + 1, k0 + 1)}")
    return DecayReport(
        c_hat=c_hat,
        argmin=(int(j0) + 1, int(k0) + 1),
        window=(N, K),
        threshold=threshold,
        verdict=verdict,
    )


def _nonzero(value: float, tol: float) -> str:
    return SATISFIED if abs(value) > tol else DEGENERATE


def hypotheses_report(data: CouplingData, threshold: float = 1e-8) -> HypothesesReport:
    decay = check_hypothesis_mu(data, data.N, threshold)
    verdicts = {
        "coupling_decay": decay.verdict,
        "A_scalar": _nonzero(data.A_scalar, threshold),
        "B_scalar": _nonzero(data.B_scalar, threshold),
        "combo_531": _nonzero(data.combo_531, threshold),
        "combo_41": _nonzero(data.combo_41, threshold),
        "diag_gap": _nonzero(data.diag_gap, threshold),
    }
    return HypothesesReport(
        decay=decay,
        scalars=data.scalars(),
        diag=[float(v) for v in data.diag[:3]],
        grad_diag=[float(v) for v in data.grad_diag],
        verdicts=verdicts,
    )
