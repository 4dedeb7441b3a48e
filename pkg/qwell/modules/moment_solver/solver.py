# qwell/modules/moment_solver/solver.py
"""
Minimal-norm real controls with prescribed moments.

Piecewise-constant v on a uniform grid: moment n is w_n . v with w_n the exact interval
integrals of e^{i omega_n t}. Splitting into real and imaginary rows gives a real system A v = b
whose minimal-norm solution v = A^T (A A^T)^{-1} b is the discrete counterpart of synthesizing v
from the conjugate-closed exponentials e^{-+i omega_n t}.
"""
import logging
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, eigh

from qwell.core.config import settings
from qwell.core.exceptions import IllConditionedError, InputError
from qwell.modules.dynamics.phase import power_phase_integrals
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.moment_solver.frequencies import FrequencySet, MomentTargets, build_frequency_set
from qwell.modules.spectral_core.basis import eigenvalues

logger = logging.getLogger("Qwell.MomentSolver")

_REAL_ROW_TOL = 1e-13


def _real_system(weights: np.ndarray, targets: np.ndarray, real_tol: float = _REAL_ROW_TOL):
    """Stack Re/Im rows, dropping identically-zero imaginary rows (omega = 0)."""
    weights = np.atleast_2d(np.asarray(weights, dtype=complex))
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    if weights.shape[0] != targets.size:
        raise InputError(f"{weights.shape[0]} weight rows for {targets.size} targets")
    re_norm = np.linalg.norm(weights.real, axis=1)
    im_norm = np.linalg.norm(weights.imag, axis=1)
    scale = np.maximum(re_norm, im_norm)
    if np.any(scale == 0):
        raise InputError("A moment row has identically zero weights")
    keep_im = im_norm > real_tol * scale
    dropped = ~keep_im
    if np.any(np.abs(targets.imag[dropped]) > 1e-12 * np.maximum(1.0, np.abs(targets[dropped]))):
        raise InputError("A real moment (omega = 0) was given a complex target")
    A = np.vstack([weights.real, weights.imag[keep_im]])
    b = np.concatenate([targets.real, targets.imag[keep_im]])
    return A, b


def scaled_gram(A: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Jacobi-scaled Gram A A^T / dt and the scaling vector."""
    G = A @ A.T / dt
    scale = 1.0 / np.sqrt(np.maximum(np.diag(G), np.finfo(float).tiny))
    return scale[:, None] * G * scale[None, :], scale


def _condition(eigs: np.ndarray) -> float:
    top = float(np.max(eigs))
    low = float(np.min(eigs))
    if low <= top * np.finfo(float).eps * eigs.size:
        return float("inf")
    return top / low


def solve_weighted_moments(
    weights: np.ndarray,
    targets: np.ndarray,
    dt: float,
    ridge: float = 0.0,
    condition_max: Optional[float] = None,
) -> Tuple[np.ndarray, Dict[str, Any]]:
    """
    Minimal discrete L^2 norm real v with weights @ v = targets (rows complex).
    The condition compared against condition_max (QWELL_GRAM_CONDITION_MAX by default) is that of
    the Jacobi-scaled discrete Gram A A^T / dt of the real system, the matrix actually inverted.
    Raises IllConditionedError when it is exceeded and no ridge is set.
    """
    condition_max = settings.QWELL_GRAM_CONDITION_MAX if condition_max is None else condition_max
    A, b = _real_system(weights, targets)
    if A.shape[0] > A.shape[1]:
        raise IllConditionedError(float("inf"), f"{A.shape[0]} real moment equations exceed {A.shape[1]} control intervals")
    Gs, scale = scaled_gram(A, dt)
    try:
        eigs, V = eigh(Gs)
    except LinAlgError as e:
        raise IllConditionedError(float("inf"), f"Gram diagonalization failed: {e}")
    cond = _condition(eigs)
    if cond > condition_max and ridge <= 0:
        raise IllConditionedError(
            cond,
            f"Moment Gram condition {cond:.3e} exceeds {condition_max:.1e}: frequencies too close for this horizon; enlarge T",
        )
    rhs = V.T @ (scale * b / dt)
    y = V @ (rhs / (eigs + ridge))
    v = A.T @ (scale * y)
    residual = float(np.max(np.abs(A @ v - b))) if b.size else 0.0
    info = {"condition": cond, "residual": residual, "equations": int(A.shape[0]), "ridge": float(ridge)}
    if ridge > 0:
        logger.debug(f"Ridge {ridge:.1e} moment solve: condition {cond:.3e}, residual {residual:.3e}")
    return v, info


def _grid_template(T: float, M: Optional[int], t0: float = 0.0) -> ControlSignal:
    M = settings.QWELL_GRID_INTERVALS if M is None else int(M)
    return ControlSignal.zeros(T, M, t0=t0)


def solve_moments(
    freqs: FrequencySet,
    targets: MomentTargets,
    M: Optional[int] = None,
    ridge: float = 0.0,
    t0: float = 0.0,
) -> ControlSignal:
    """Real v on (t0, t0 + T) with int v e^{i omega_n t} dt = d_n for every entry."""
    targets.check_against(freqs)
    template = _grid_template(freqs.T, M, t0)
    W = template.interval_weights(freqs.omegas)
    values, info = solve_weighted_moments(W, targets.d, template.dt, ridge=ridge)
    v = ControlSignal(values=values, dt=template.dt, t0=t0)
    v.meta.update(info)
    continuous = gram_condition(freqs)
    gaps = freqs.gaps()
    min_gap = float(gaps.min()) if gaps.size else None
    v.meta.update({"gram_condition": continuous, "min_gap": min_gap})
    if continuous > settings.QWELL_GRAM_CONDITION_MAX:
        logger.warning(f"⚠️ Exponential Gram condition {continuous:.3e} on T={freqs.T:.6g} exceeds {settings.QWELL_GRAM_CONDITION_MAX:.1e}; the grid solve passed at {info['condition']:.3e}")
    if min_gap is not None and min_gap * freqs.T < 2.0 * np.pi:
        logger.warning(f"⚠️ Smallest frequency gap {min_gap:.4g} is below 2 pi / T = {2.0 * np.pi / freqs.T:.4g}: moments are weakly separated")
    logger.info(f"✅ Solved {len(freqs)} moments on T={freqs.T:.6g} (cond {info['condition']:.3e}, |v|={v.l2_norm():.4g})")
    return v


def verify_moments(v: ControlSignal, freqs: Union[FrequencySet, Sequence[float]],
                   targets: Optional[MomentTargets] = None) -> np.ndarray:
    """Raw moments of v, or |moment - d_n| when targets are given."""
    omegas = freqs.omegas if isinstance(freqs, FrequencySet) else np.asarray(freqs, dtype=float)
    moments = v.moments(omegas)
    if targets is None:
        return moments
    return np.abs(moments - targets.d)


def project_VT(v: ControlSignal, K_trunc: int, ridge: float = 0.0) -> ControlSignal:
    """
    Orthogonal projection of v onto {int v e^{i (lambda_k - lambda_1) t} = 0, k = 1..K_trunc}.
    Idempotent; the removed part is the minimal-norm control carrying the moments of v.
    """
    if v.kind != "constant":
        raise InputError("V_T projection expects a piecewise-constant control")
    omegas = eigenvalues(K_trunc) - eigenvalues(1)[0]
    W = v.interval_weights(omegas)
    correction, info = solve_weighted_moments(W, W @ v.values, v.dt, ridge=ridge)
    out = ControlSignal(v.values - correction, v.dt, v.t0, zero_tail=v.zero_tail)
    out.meta.update({"V_T_modes": K_trunc, "condition": info["condition"]})
    return out


def gram_condition(freqs: Union[FrequencySet, Sequence[float]], T: Optional[float] = None) -> float:
    """2-norm condition of the conjugate-closed Gram G_mn = int_0^T e^{i (omega_n - omega_m) t} dt."""
    if isinstance(freqs, FrequencySet):
        omegas, T = freqs.omegas, freqs.T if T is None else T
    else:
        omegas = np.asarray(freqs, dtype=float)
        if T is None:
            raise InputError("A horizon is needed for raw frequency lists")
    positive = omegas[omegas != 0.0]
    closed = np.concatenate([-positive[::-1], omegas[omegas == 0.0], positive])
    diff = closed[None, :] - closed[:, None]
    G = power_phase_integrals(1j * diff, T, order=0)[0]
    eigs = eigh(G, eigvals_only=True)
    return _condition(eigs)


def leakage_report(v: ControlSignal, wider: FrequencySet, enforced: Optional[FrequencySet] = None) -> Dict[str, Any]:
    """Moments of v at frequencies of `wider` that `enforced` does not control."""
    enforced_omegas = set() if enforced is None else {round(w, 9) for w in enforced.omegas}
    free = [e for e in wider.entries if round(e.omega, 9) not in enforced_omegas]
    if not free:
        return {"count": 0, "max_abs": 0.0, "l2": 0.0, "worst_omega": None}
    omegas = np.array([e.omega for e in free])
    moments = np.abs(v.moments(omegas))
    worst = int(np.argmax(moments))
    return {
        "count": len(free),
        "max_abs": float(moments[worst]),
        "l2": float(np.linalg.norm(moments)),
        "worst_omega": float(omegas[worst]),
        "worst_pairs": [list(p) for p in free[worst].pairs],
    }


def vt_window(T: float, K_max: int, M: Optional[int] = None, condition_max: Optional[float] = None) -> int:
    """Largest K_trunc <= K_max whose V_T Gram at horizon T stays under the conditioning threshold."""
    condition_max = settings.QWELL_GRAM_CONDITION_MAX if condition_max is None else condition_max
    template = _grid_template(T, M)
    best = 1
    for K in range(1, K_max + 1):
        A, _ = _real_system(template.interval_weights(eigenvalues(K) - eigenvalues(1)[0]), np.zeros(K))
        if A.shape[0] > A.shape[1]:
            break
        Gs, _ = scaled_gram(A, template.dt)
        if _condition(eigh(Gs, eigvals_only=True)) > condition_max:
            break
        best = K
    return best
