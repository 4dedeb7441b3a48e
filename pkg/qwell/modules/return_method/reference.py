# qwell/modules/return_method/reference.py
"""
Reference trajectory of the return method.

The control is zero on (0, eps/2), shifts the diagonal mu-expectations by eta at fixed
checkpoints on (eps/2, eps), steers every particle back onto span{Phi_1..Phi_j} with a
balanced phase product on (eps, T1), and finally waits freely until the phases line up.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import lstsq

from qwell.core.config import settings
from qwell.core.exceptions import (
    ConstraintViolationError,
    IllConditionedError,
    InputError,
    NumericalError,
    QwellBaseException,
    StageError,
    TrustRegionError,
)
from qwell.modules.dynamics.linearized import tangent_frame_weights
from qwell.modules.dynamics.propagator import propagate
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import StateFrame, Trajectory, free_frame, weighted_h3_norm
from qwell.modules.linearized_analysis.targets import require_coupling, variant_weights
from qwell.modules.moment_solver.solver import solve_weighted_moments
from qwell.modules.return_method.newton import damped_newton
from qwell.modules.spectral_core.basis import eigenvalues
from qwell.modules.spectral_core.coupling import CouplingData

logger = logging.getLogger("Qwell.ReturnMethod")

REFERENCE_VARIANTS: Dict[str, int] = {"N3_phase_delay": 3, "N2_phase": 2, "N2_delay": 2}
_ALIASES = {"N3": "N3_phase_delay"}

_STAGE1_INTERVALS = 1024
_PHASE_TOL = 1e-8
_ENDPOINT_TOL = 1e-6
_GRID_TOL = 1e-9


def normalize_variant(variant: str) -> str:
    variant = _ALIASES.get(variant, variant)
    if variant not in REFERENCE_VARIANTS:
        raise InputError(f"Unknown reference variant: {variant} (expected one of {sorted(REFERENCE_VARIANTS)})")
    return variant


def variant_particles(variant: str) -> int:
    return REFERENCE_VARIANTS[normalize_variant(variant)]


def wrap_angle(x):
    """Representative in [-pi, pi)."""
    return (np.asarray(x, dtype=float) + np.pi) % (2.0 * np.pi) - np.pi


def _snap(t: float, dt: float) -> int:
    return int(round(t / dt))


def _check_stage_times(eps: float, eps1: Optional[float], N: int, T1: Optional[float] = None) -> None:
    if not eps > 0:
        raise InputError(f"eps must be positive, got {eps}")
    if T1 is not None and not eps < T1:
        raise InputError(f"eps={eps} must lie in (0, T1={T1})")
    if N == 3 and (eps1 is None or not 0.5 * eps < eps1 < eps):
        raise InputError(f"eps1={eps1} must lie in (eps/2, eps) = ({0.5 * eps}, {eps})")


def expectations(coeffs: np.ndarray, mu_mat: np.ndarray) -> np.ndarray:
    """<mu psi^j, psi^j> for each row of Schrodinger coefficients."""
    coeffs = np.atleast_2d(coeffs)
    K = coeffs.shape[1]
    return np.einsum("jk,kl,jl->j", coeffs, mu_mat[:K, :K], np.conj(coeffs)).real


def weighted_phase_product(z: np.ndarray, weights: np.ndarray) -> complex:
    """prod_j z_j^{w_j}, with conj(z_j)^{|w_j|} for negative weights."""
    prod = 1.0 + 0.0j
    for zj, wj in zip(z, weights):
        power = int(round(abs(wj)))
        prod *= zj ** power if wj > 0 else np.conj(zj) ** power
    return prod


def stage_checkpoints(variant: str, eps: float, eps1: Optional[float]) -> List[Tuple[float, int]]:
    """(time, particle whose expectation is shifted by eta) for the first stage."""
    if variant_particles(variant) == 3:
        return [(eps1, 0), (eps, 1)]
    return [(eps, 0)]


@dataclass
class ReferenceTrajectory:
    """u_ref on [0, T1] with a free tail to T_eta, its dense trajectory and the phase bookkeeping."""
    control: ControlSignal
    traj: Trajectory
    eta: float
    eps: float
    eps1: Optional[float]
    T1: float
    thetas: np.ndarray
    T_eta: float
    theta_eta: float
    variant: str
    K_pump: int = 4
    stage_times: Dict[str, float] = field(default_factory=dict)
    residuals: Dict[str, float] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def N(self) -> int:
        return variant_particles(self.variant)

    @property
    def endpoint(self) -> StateFrame:
        return self.traj.final

    def ideal_endpoint(self, K: Optional[int] = None) -> StateFrame:
        """e^{-i theta_eta} phi_j at T_eta (e^{-i theta_eta} Phi_j(T1) for the in-time phase variant)."""
        K = self.traj.coeffs.shape[2] if K is None else K
        lam = eigenvalues(K)
        coeffs = np.zeros((self.N, K), dtype=complex)
        for j in range(self.N):
            coeffs[j, j] = np.exp(-1j * (self.thetas[j] + lam[j] * self.T_eta))
        return StateFrame(t=self.T_eta, coeffs=coeffs)

    def summary(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "eta": self.eta,
            "eps": self.eps,
            "eps1": self.eps1,
            "T1": self.T1,
            "K_pump": self.K_pump,
            "thetas": self.thetas.tolist(),
            "T_eta": self.T_eta,
            "theta_eta": self.theta_eta,
            "stage_times": dict(self.stage_times),
            "residuals": dict(self.residuals),
            "control_l2": self.control.l2_norm(),
        }


# --- stage 1: diagonal expectations ---
def _tone_columns(M1: int, dt: float, t0: float, windows: List[Tuple[int, int]], omegas: np.ndarray) -> np.ndarray:
    """Normalized cos/sin columns at the pump frequencies, each supported on one window."""
    cols = []
    for a, b in windows:
        seg = ControlSignal(np.zeros(b - a), dt, t0 + a * dt)
        W = seg.interval_weights(omegas) / dt
        for part in (W.real, W.imag):
            for row in part:
                col = np.zeros(M1)
                col[a:b] = row / np.linalg.norm(row)
                cols.append(col)
    return np.array(cols).T


def stage1_control(
    data: CouplingData,
    eta: float,
    eps: float,
    eps1: Optional[float] = None,
    K_pump: int = 4,
    variant: str = "N3_phase_delay",
    dt: Optional[float] = None,
    eta_max: float = 0.1,
) -> ControlSignal:
    """
    Control on (eps/2, eps) from Phi_j(eps/2) such that <mu psi^j, psi^j> equals
    <mu phi_j, phi_j> + eta delta_{j, j_c} at each checkpoint (eps1 -> particle 1 and
    eps -> particle 2 for three particles; eps -> particle 1 for two).
    Newton uses the exact discrete Jacobian restricted to the pump tones
    cos/sin((lambda_K - lambda_j) t) on each window between checkpoints.
    """
    variant = normalize_variant(variant)
    N = variant_particles(variant)
    if data.N < N:
        raise InputError(f"Variant {variant} needs {N} particles, coupling data has {data.N}")
    _check_stage_times(eps, eps1, N)
    if eta < 0 or eta > eta_max:
        raise TrustRegionError(f"eta={eta} outside the stage-1 budget [0, {eta_max}]")
    K = data.K_max
    if not max(4, N + 1) <= K_pump <= K:
        raise InputError(f"K_pump={K_pump} must lie in [{max(4, N + 1)}, K_max={K}]")
    for j in range(1, N + 1):
        require_coupling(data.mu_mat[j - 1, K_pump - 1], (j, K_pump))

    dt = eps / _STAGE1_INTERVALS if dt is None else float(dt)
    i_half, i_eps = _snap(0.5 * eps, dt), _snap(eps, dt)
    t_half = i_half * dt
    M1 = i_eps - i_half
    checkpoints = [(_snap(t, dt) - i_half, j) for t, j in stage_checkpoints(variant, eps, eps1)]
    edges = [0] + [ic for ic, _ in checkpoints]
    if i_half < 1 or any(b <= a for a, b in zip(edges[:-1], edges[1:])):
        raise InputError(f"Control step {dt:.3g} too coarse to separate the stage-1 checkpoints")
    if eta == 0:
        return ControlSignal(np.zeros(M1), dt, t_half)

    lam = eigenvalues(K)
    mu = data.mu_mat
    d = data.diag[:N]
    b0 = free_frame(N, K, t_half).moving_coefficients()
    windows = list(zip(edges[:-1], edges[1:]))
    C = _tone_columns(M1, dt, t_half, windows, lam[K_pump - 1] - lam[:N])

    def evaluate(x: np.ndarray):
        ctrl = ControlSignal(x, dt, t_half)
        res, rows = [], []
        for ic, shifted in checkpoints:
            sub = ctrl if ic == M1 else ControlSignal(x[:ic], dt, t_half)
            w, P, B = tangent_frame_weights(sub, mu, b0)
            phase = np.exp(-1j * lam * (t_half + ic * dt))
            c = B[-1] * phase[None, :]
            target = d.copy()
            target[shifted] += eta
            res.append(expectations(c, mu) - target)
            for j in range(N):
                y = P.T @ (phase * (mu @ np.conj(c[j])))
                row = np.zeros(M1)
                row[:ic] = 2.0 * np.real(1j * (w[:, j, :] @ y))
                rows.append(row)
        return np.concatenate(res), np.array(rows)

    def step(x: np.ndarray, r: np.ndarray, J: np.ndarray) -> np.ndarray:
        S = J @ C
        sv = np.linalg.svd(S, compute_uv=False)
        if sv[-1] <= 1e-12 * sv[0]:
            raise IllConditionedError(sv[0] / max(sv[-1], np.finfo(float).tiny), "Stage-1 pump sensitivities are singular")
        a = lstsq(S, -r)[0]
        return C @ a

    tol = settings.NEWTON_BUDGET["tol"] * (1.0 + eta)
    x, history = damped_newton(evaluate, step, np.zeros(M1), tol=tol, label="stage1")
    v = ControlSignal(x, dt, t_half)
    v.meta.update({"residual_history": history, "K_pump": K_pump, "checkpoints": [(t_half + ic * dt, j + 1) for ic, j in checkpoints]})
    logger.info(f"✅ Stage 1 ({variant}, eta={eta:.3g}): {len(history) - 1} Newton steps, |v|={v.l2_norm():.3e}")
    return v


# --- stage 2: back onto the eigenstates up to phases ---
def stage2_control(
    state_at_eps: StateFrame,
    data: CouplingData,
    T0: Optional[float] = None,
    Tf: float = 1.0,
    variant: str = "N3_phase_delay",
    M: Optional[int] = None,
    trust: float = 0.5,
) -> ControlSignal:
    """
    Control on (T0, Tf) such that <psi^j(Tf), Phi_k(Tf)> = 0 for k >= j + 1 (up to K_max) and
    Im prod_j <psi^j(Tf), Phi_j(Tf)>^{w_j} = 0 with the variant's weights.
    Newton steps are minimal-norm solves of the exact discrete Jacobian.
    """
    variant = normalize_variant(variant)
    N = variant_particles(variant)
    T0 = state_at_eps.t if T0 is None else float(T0)
    if abs(state_at_eps.t - T0) > _GRID_TOL * max(1.0, T0):
        raise InputError(f"State is at t={state_at_eps.t}, stage 2 starts at {T0}")
    if state_at_eps.N != N or state_at_eps.K != data.K_max:
        raise InputError(f"Stage 2 expects an ({N}, {data.K_max}) state, got {state_at_eps.coeffs.shape}")
    if not Tf > T0:
        raise InputError(f"Stage 2 needs Tf > T0, got ({T0}, {Tf})")
    M = settings.QWELL_GRID_INTERVALS if M is None else int(M)
    dt = (Tf - T0) / M

    K = data.K_max
    mu = data.mu_mat
    b0 = state_at_eps.moving_coefficients()
    distance = max(weighted_h3_norm(b0[j] - np.eye(K)[j]) for j in range(N))
    if distance > trust:
        raise TrustRegionError(f"State at T0 is {distance:.3e} away from the eigenstates (trust radius {trust})")

    weights = variant_weights(variant)
    upper = [(j, slice(j + 1, K)) for j in range(N)]

    def evaluate(x: np.ndarray):
        w, P, B = tangent_frame_weights(ControlSignal(x, dt, T0), mu, b0)
        bT = B[-1]
        z = np.array([bT[j, j] for j in range(N)])
        prod = weighted_phase_product(z, weights)
        r = np.concatenate([bT[j, sl] for j, sl in upper] + [[prod.imag]])
        return r, (w, P, z, prod)

    def step(x: np.ndarray, r: np.ndarray, ctx) -> np.ndarray:
        w, P, z, prod = ctx
        rows = 1j * np.einsum("njl,kl->jkn", w, P)
        dphase = np.zeros(M, dtype=complex)
        for j, wj in enumerate(weights):
            dz = rows[j, j]
            dphase += wj * dz / z[j] if wj > 0 else -wj * np.conj(dz) / np.conj(z[j])
        phase_row = np.imag(prod * dphase).astype(complex)
        A = np.vstack([rows[j, sl] for j, sl in upper] + [phase_row[None, :]])
        dv, _ = solve_weighted_moments(A, -r, dt)
        return dv

    x, history = damped_newton(evaluate, step, np.zeros(M), label="stage2")
    v = ControlSignal(x, dt, T0)
    v.meta.update({"residual_history": history, "start_distance": distance})
    logger.info(f"✅ Stage 2 ({variant}) on ({T0:.4g}, {Tf:.4g}): {len(history) - 1} Newton steps, |v|={v.l2_norm():.3e}")
    return v


# --- free delay ---
def phase_delay_solve(
    thetas: np.ndarray,
    lambdas: Optional[np.ndarray] = None,
    T1: float = 1.0,
    variant: str = "N3_phase_delay",
    tol: float = _PHASE_TOL,
) -> Tuple[float, float, np.ndarray]:
    """
    Smallest T_eta (> T1, or = T1 for the in-time phase variant) and theta_eta such that
    theta_j + lambda_j T_eta - theta_eta = 0 mod 2 pi for every particle, given
    psi^j(T1) = e^{-i theta_j} Phi_j(T1). Returns (T_eta, theta_eta, residuals).
    """
    variant = normalize_variant(variant)
    N = variant_particles(variant)
    thetas = np.asarray(thetas, dtype=float)
    if thetas.size != N:
        raise InputError(f"Variant {variant} needs {N} phases, got {thetas.size}")
    lam = eigenvalues(N) if lambdas is None else np.asarray(lambdas, dtype=float)[:N]
    two_pi = 2.0 * np.pi

    if variant == "N2_phase":
        gap = float(wrap_angle(thetas[0] - thetas[1]))
        if abs(gap) > tol:
            raise ConstraintViolationError(f"theta_1 - theta_2 = 0 [2 pi] violated by {gap:.3e}")
        theta_eta = float(wrap_angle(thetas[0]))
        return float(T1), theta_eta, wrap_angle(thetas - theta_eta)

    if variant == "N2_delay":
        gap = float(wrap_angle(4.0 * thetas[0] - thetas[1]))
        if abs(gap) > tol:
            raise ConstraintViolationError(f"4 theta_1 - theta_2 = 0 [2 pi] violated by {gap:.3e}")
        base = -thetas[0] / lam[0]
        period = two_pi / lam[0]
        theta_eta = 0.0
        candidates = [base]
    else:
        gap = lam[1] - lam[0]
        period = two_pi / gap * 3.0
        theta_eta = None
        candidates = [(thetas[0] - thetas[1] + two_pi * m) / gap for m in range(3)]

    best = None
    for T in candidates:
        offset = theta_eta if theta_eta is not None else thetas[0] + lam[0] * T
        residual = np.max(np.abs(wrap_angle(thetas + lam * T - offset)))
        if best is None or residual < best[1]:
            best = (T, residual)
    T, residual = best
    if residual > tol:
        combo = float(wrap_angle(5.0 * thetas[0] - 8.0 * thetas[1] + 3.0 * thetas[2])) if N == 3 else float("nan")
        raise ConstraintViolationError(
            f"5 theta_1 - 8 theta_2 + 3 theta_3 = 0 [2 pi] violated ({combo:.3e}); best congruence residual {residual:.3e}"
        )
    n = np.floor((T1 - T) / period) + 1.0
    T_eta = float(T + n * period)
    if theta_eta is None:
        theta_eta = float(wrap_angle(thetas[0] + lam[0] * T_eta))
    residuals = wrap_angle(thetas + lam * T_eta - theta_eta)
    logger.debug(f"Phase delay ({variant}): T_eta={T_eta:.6f}, theta_eta={theta_eta:.6f}, max residual {np.max(np.abs(residuals)):.2e}")
    return T_eta, float(theta_eta), residuals


# --- assembly ---
def end_phases(frame: StateFrame, N: int) -> np.ndarray:
    """theta_j with <psi^j, Phi_j(t)> = |.| e^{-i theta_j}."""
    b = frame.moving_coefficients()
    return -np.angle(np.array([b[j, j] for j in range(N)]))


def _verify_reference(traj: Trajectory, data: CouplingData, variant: str, eta: float,
                      checkpoints: List[Tuple[int, int]], ideal: StateFrame) -> Dict[str, float]:
    N = variant_particles(variant)
    d = data.diag[:N]
    conditions = 0.0
    for idx, shifted in checkpoints:
        target = d.copy()
        target[shifted] += eta
        conditions = max(conditions, float(np.max(np.abs(expectations(traj.coeffs[idx], data.mu_mat) - target))))
    endpoint = float(np.max(np.linalg.norm(traj.final.coeffs - ideal.coeffs, axis=1)))
    return {
        "conditions": conditions,
        "endpoint": endpoint,
        "gram_drift": traj.gram_drift(),
        "control_ratio": traj.control.l2_norm() / eta if eta > 0 else 0.0,
    }


def build_reference(
    data: CouplingData,
    eta: float,
    eps: float = 0.3,
    eps1: Optional[float] = 0.2,
    T1: float = 1.0,
    variant: str = "N3_phase_delay",
    K_pump: int = 4,
    M: Optional[int] = None,
    eta_max: float = 0.1,
) -> ReferenceTrajectory:
    """zero | stage 1 | stage 2 | free tail, with every construction property re-checked on one full propagation."""
    variant = normalize_variant(variant)
    N = variant_particles(variant)
    if data.N < N:
        raise InputError(f"Variant {variant} needs {N} particles, coupling data has {data.N}")
    _check_stage_times(eps, eps1, N, T1)
    M = settings.QWELL_GRID_INTERVALS if M is None else int(M)
    dt = T1 / M
    K = data.K_max
    i_half, i_eps = _snap(0.5 * eps, dt), _snap(eps, dt)
    eps1 = eps1 if N == 3 else None

    try:
        s1 = stage1_control(data, eta, eps, eps1, K_pump, variant, dt=dt, eta_max=eta_max)
    except QwellBaseException as e:
        raise StageError("stage1", e)
    state_eps = propagate(free_frame(N, K, s1.t0), s1, data).final
    try:
        s2 = stage2_control(state_eps, data, s1.grid_end, T1, variant, M=M - i_eps)
    except QwellBaseException as e:
        raise StageError("stage2", e)

    core = ControlSignal.concatenate([ControlSignal(np.zeros(i_half), dt, 0.0), s1, s2])
    at_T1 = propagate(free_frame(N, K, 0.0), core, data).final
    thetas = end_phases(at_T1, N)
    try:
        T_eta, theta_eta, phase_res = phase_delay_solve(thetas, eigenvalues(N), T1, variant)
    except QwellBaseException as e:
        raise StageError("phase_delay", e)

    control = core.with_tail(max(0.0, T_eta - T1))
    traj = propagate(free_frame(N, K, 0.0), control, data)
    checkpoints = [(_snap(t, dt), j) for t, j in stage_checkpoints(variant, eps, eps1)]
    ref = ReferenceTrajectory(
        control=control,
        traj=traj,
        eta=float(eta),
        eps=float(eps),
        eps1=None if eps1 is None else float(eps1),
        T1=float(T1),
        thetas=thetas,
        T_eta=T_eta,
        theta_eta=theta_eta,
        variant=variant,
        K_pump=K_pump,
        stage_times={"eps_half": i_half * dt, "eps1": checkpoints[0][0] * dt if N == 3 else None, "eps": i_eps * dt},
        meta={"dt": dt, "M": M, "K_max": K, "stage1_history": s1.meta.get("residual_history", []),
              "stage2_history": s2.meta.get("residual_history", [])},
    )
    ref.residuals = _verify_reference(traj, data, variant, eta, checkpoints, ref.ideal_endpoint())
    ref.residuals["phase"] = float(np.max(np.abs(phase_res))) if variant != "N2_phase" else 0.0
    if ref.residuals["conditions"] > 1e-9 * (1.0 + eta):
        raise NumericalError(f"Stage-1 conditions missed by {ref.residuals['conditions']:.3e} on the assembled reference")
    if ref.residuals["endpoint"] > _ENDPOINT_TOL:
        raise NumericalError(f"Reference endpoint off by {ref.residuals['endpoint']:.3e} (> {_ENDPOINT_TOL:.0e})")
    logger.info(
        f"✅ Reference {variant} eta={eta:.3g}: T_eta={T_eta:.6f}, theta_eta={theta_eta:.6f}, "
        f"|u|/eta={ref.residuals['control_ratio']:.4g}, endpoint error {ref.residuals['endpoint']:.2e}"
    )
    return ref


def extend_reference(ref: ReferenceTrajectory, extra_time: float, data: CouplingData) -> ReferenceTrajectory:
    """Zero control for extra_time more: the endpoint becomes e^{-i theta_eta} Phi_j(extra_time)."""
    if extra_time < 0:
        raise InputError(f"extra_time must be >= 0, got {extra_time}")
    if extra_time == 0:
        return ref
    control = ref.control.with_tail(ref.control.zero_tail + extra_time)
    traj = propagate(free_frame(ref.N, data.K_max, 0.0), control, data)
    return ReferenceTrajectory(
        control=control,
        traj=traj,
        eta=ref.eta,
        eps=ref.eps,
        eps1=ref.eps1,
        T1=ref.T1,
        thetas=ref.thetas.copy(),
        T_eta=ref.T_eta + extra_time,
        theta_eta=ref.theta_eta,
        variant=ref.variant,
        K_pump=ref.K_pump,
        stage_times=dict(ref.stage_times),
        residuals=dict(ref.residuals),
        meta={**ref.meta, "extra_time": ref.meta.get("extra_time", 0.0) + extra_time},
    )
