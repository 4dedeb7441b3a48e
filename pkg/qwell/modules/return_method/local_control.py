# qwell/modules/return_method/local_control.py
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from qwell.core.exceptions import (
    CompatibilityError,
    DegenerateFamilyError,
    IllConditionedError,
    InputError,
    NumericalError,
    QwellBaseException,
    TrustRegionError,
)
from qwell.core.workers import map_sync
from qwell.modules.dynamics.linearized import tangent_frame_weights
from qwell.modules.dynamics.propagator import hermitian_exponentials, propagate
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import StateFrame, free_frame, moving_phases, weighted_h3_norm
from qwell.modules.linearized_analysis.targets import require_coupling
from qwell.modules.moment_solver.solver import solve_weighted_moments
from qwell.modules.return_method.newton import damped_newton
from qwell.modules.return_method.reference import (
    ReferenceTrajectory,
    build_reference,
    expectations,
    extend_reference,
)
from qwell.modules.spectral_core.basis import eigenvalues
from qwell.modules.spectral_core.coupling import CouplingData

logger = logging.getLogger("Qwell.ReturnMethod")

Pair = Tuple[int, int]

_INVARIANT_TOL = 1e-10
_LINEAR_TOL = 1e-6
_ENDPOINT_TOL = 1e-6
_GRAM_TOL = 1e-8


@dataclass
class XfTarget:
    """
    Perturbation rows (Schrodinger coefficients at time t) in the tangent space of the
    reference endpoint: Re<phi^j, psi^j_ref> = 0 and <phi^j, psi^k_ref> = -conj<phi^k, psi^j_ref>.
    """
    rows: np.ndarray
    t: float
    reference: np.ndarray

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=complex))
        self.reference = np.atleast_2d(np.asarray(self.reference, dtype=complex))
        if self.rows.shape != self.reference.shape:
            raise InputError(f"Target rows {self.rows.shape} do not match the reference {self.reference.shape}")
        worst = self.invariant_residual()
        if worst > _INVARIANT_TOL * max(1.0, float(np.max(np.abs(self.rows)))):
            raise InputError(f"Target leaves the tangent space of the reference endpoint (invariant residual {worst:.3e})")

    @classmethod
    def zeros(cls, ref: ReferenceTrajectory) -> "XfTarget":
        R = ref.endpoint.coeffs
        return cls(rows=np.zeros_like(R), t=ref.endpoint.t, reference=R)

    @property
    def N(self) -> int:
        return self.rows.shape[0]

    def overlaps(self) -> np.ndarray:
        """<phi^j, psi^k_ref>."""
        return self.rows @ np.conj(self.reference.T)

    def invariant_residual(self) -> float:
        tau = self.overlaps()
        diag = float(np.max(np.abs(np.real(np.diag(tau)))))
        S = tau + np.conj(tau.T)
        np.fill_diagonal(S, 0.0)
        return max(diag, float(np.max(np.abs(S))))

    def norm(self) -> float:
        return float(np.linalg.norm(self.rows))

    def __sub__(self, other: "XfTarget") -> "XfTarget":
        return XfTarget(self.rows - other.rows, self.t, self.reference)


@dataclass
class FrameFunctions:
    """
    Interval averages of f_n(t) = <mu psi^j_ref, Phi^eta_k> / <mu phi_j, phi_k> for the
    off-diagonal pairs, of f_{j,j} = <mu psi^j_ref, psi^j_ref> / <mu phi_j, phi_j> (f_0 is the
    last one), and the raw endpoint weights they come from.
    """
    times: np.ndarray
    dt: float
    pairs: List[Pair]
    values: np.ndarray
    diag: np.ndarray
    diag_nodes: np.ndarray
    weights: np.ndarray
    propagator: np.ndarray

    @property
    def f0(self) -> np.ndarray:
        return self.diag[-1]

    def window(self, T: float) -> int:
        return min(self.times.size, int(round(T / self.dt)))


def reference_frame_functions(ref: ReferenceTrajectory, data: CouplingData,
                              index_set: Optional[Sequence[Pair]] = None) -> FrameFunctions:
    N = ref.N
    K = data.K_max
    mu = data.mu_mat
    dt = ref.control.dt
    w, P, _ = tangent_frame_weights(ref.control, mu, np.eye(K, dtype=complex)[:N])
    if index_set is None:
        pairs = [(j, k) for j in range(1, N + 1) for k in range(j + 1, K + 1)]
    else:
        pairs = [(int(j), int(k)) for j, k in index_set if j != k]
    values = np.empty((len(pairs), w.shape[0]), dtype=complex)
    for n, (j, k) in enumerate(pairs):
        require_coupling(mu[j - 1, k - 1], (j, k))
        values[n] = w[:, j - 1, k - 1] / (mu[j - 1, k - 1] * dt)
    d = data.diag[:N]
    for j in range(N):
        require_coupling(d[j], (j + 1, j + 1))
    diag = np.real(np.stack([w[:, j, j] for j in range(N)])) / (d[:, None] * dt)
    nodes = np.stack([expectations(c, mu) for c in ref.traj.coeffs]) / d[None, :]
    return FrameFunctions(
        times=ref.control.interval_starts,
        dt=dt,
        pairs=pairs,
        values=values,
        diag=diag,
        diag_nodes=nodes,
        weights=w,
        propagator=P,
    )


def _unperturbed(frame: FrameFunctions) -> np.ndarray:
    """Interval averages of e^{i omega_n t} for the pairs, and 1 for f_0."""
    lam = eigenvalues(max(k for _, k in frame.pairs))
    omegas = np.array([lam[k - 1] - lam[j - 1] for j, k in frame.pairs])
    grid = ControlSignal(np.zeros(frame.times.size), frame.dt, float(frame.times[0]))
    W = grid.interval_weights(omegas) / frame.dt
    return np.vstack([W, np.ones((1, frame.times.size))])


def riesz_gap(ref: ReferenceTrajectory, data: CouplingData, T: Optional[float] = None,
              frame: Optional[FrameFunctions] = None) -> float:
    """Operator norm on L^2(0, T) of v -> (int v (f_n - e^{i omega_n t}))_n, f_0 - 1 included."""
    frame = reference_frame_functions(ref, data) if frame is None else frame
    n = frame.window(ref.T1 if T is None else T)
    D = np.vstack([frame.values, frame.f0[None, :]]) - _unperturbed(frame)
    return float(np.sqrt(frame.dt) * np.linalg.norm(D[:, :n], 2))


def family_verdict(ref: ReferenceTrajectory, data: CouplingData, T: Optional[float] = None,
                   frame: Optional[FrameFunctions] = None) -> Dict[str, Any]:
    """Compares the gap with the lower frame bound of the unperturbed exponentials."""
    frame = reference_frame_functions(ref, data) if frame is None else frame
    n = frame.window(ref.T1 if T is None else T)
    gap = riesz_gap(ref, data, T, frame)
    sv = np.linalg.svd(np.sqrt(frame.dt) * _unperturbed(frame)[:, :n], compute_uv=False)
    lower = float(sv[-1])
    return {"gap": gap, "lower_bound": lower, "verdict": "basis" if gap < lower else "undecided"}


def eta_sweep(data: CouplingData, eta: float, factor: float = 10.0, T: Optional[float] = None,
              ref: Optional[ReferenceTrajectory] = None, small: Optional[ReferenceTrajectory] = None,
              **build_kwargs) -> Dict[str, Any]:
    """
    riesz_gap at eta and eta / factor on otherwise identical references. The gap is linear
    in eta when the ratio lies within 20% of factor.
    """
    if not eta > 0 or not factor > 1:
        raise InputError(f"eta sweep needs eta > 0 and factor > 1, got eta={eta}, factor={factor}")
    ref = build_reference(data, eta, **build_kwargs) if ref is None else ref
    small = build_reference(data, eta / factor, **build_kwargs) if small is None else small
    for built, wanted in ((ref, eta), (small, eta / factor)):
        if abs(built.eta - wanted) > 1e-12 * wanted:
            raise InputError(f"Reference was built at eta={built.eta}, sweep needs eta={wanted}")
    gaps = [riesz_gap(ref, data, T), riesz_gap(small, data, T)]
    ratio = gaps[0] / gaps[1] if gaps[1] > 0 else float("inf")
    linear = bool(0.8 * factor < ratio < 1.2 * factor)
    if not linear:
        logger.warning(f"⚠️ Riesz gap not linear in eta: gap({eta:.3g})/gap({eta / factor:.3g}) = {ratio:.4g}, expected about {factor:g}")
    return {"eta": [float(eta), float(eta / factor)], "gap": gaps, "ratio": ratio, "linear": linear}


def _ref_coordinates(ref: ReferenceTrajectory, target: XfTarget, P: np.ndarray) -> np.ndarray:
    """<phi^j, Phi^eta_k(T)> for k = 1..K, with Phi^eta_k(T) = U_ref(T) phi_k."""
    if abs(target.t - ref.endpoint.t) > 1e-9 * max(1.0, ref.endpoint.t):
        raise InputError(f"Target given at t={target.t}, reference ends at {ref.endpoint.t}")
    tb = target.rows * moving_phases(target.rows.shape[1], target.t)[None, :]
    return tb @ np.conj(P)


def linear_control_around_ref(ref: ReferenceTrajectory, data: CouplingData, target: XfTarget,
                              frame: Optional[FrameFunctions] = None) -> ControlSignal:
    """
    v with Psi(T) = target for the linearization around ref. v0 solves the moment system of
    the off-diagonal pairs and f_0; the remaining diagonal entries are then corrected with the
    minimal functions g_{j,j} biorthogonal to the whole family.
    """
    frame = reference_frame_functions(ref, data) if frame is None else frame
    N = ref.N
    K = data.K_max
    if target.rows.shape != (N, K):
        raise InputError(f"Target rows {target.rows.shape}, expected {(N, K)}")
    w = frame.weights
    dt = frame.dt
    M = w.shape[0]
    tau = _ref_coordinates(ref, target, frame.propagator)

    if target.norm() == 0:
        return ControlSignal(np.zeros(M), dt, 0.0, zero_tail=ref.control.zero_tail)

    upper = [(j, k) for j in range(N) for k in range(j + 1, K)]
    rows_I = [1j * w[:, j, k] for j, k in upper] + [np.real(w[:, N - 1, N - 1]).astype(complex)]
    targets_I = [tau[j, k] for j, k in upper] + [np.imag(tau[N - 1, N - 1])]
    diag_rows = [np.real(w[:, j, j]) for j in range(N - 1)]

    v0, info = solve_weighted_moments(np.array(rows_I), np.array(targets_I), dt)
    v = v0.copy()
    if diag_rows:
        family = np.vstack([np.array(rows_I), np.array(diag_rows, dtype=complex)])
        n_I = len(rows_I)
        for j, row in enumerate(diag_rows):
            unit = np.zeros(family.shape[0])
            unit[n_I + j] = 1.0
            try:
                g, g_info = solve_weighted_moments(family, unit, dt)
            except IllConditionedError as e:
                raise DegenerateFamilyError(
                    f"Diagonal functions f_(j,j) and f_0 are numerically dependent (condition {e.condition:.3e}); increase eta"
                )
            v += (np.imag(tau[j, j]) - row @ v0) * g

    E = 1j * np.einsum("n,njk->jk", v, w)
    residual = float(np.max(np.abs(E - tau)))
    scale = max(1.0, float(np.max(np.abs(tau))))
    if residual > _LINEAR_TOL * scale:
        raise NumericalError(f"Linearized endpoint misses the target by {residual:.3e}")
    out = ControlSignal(v, dt, 0.0, zero_tail=ref.control.zero_tail)
    out.meta.update({"linear_residual": residual, "condition": info["condition"]})
    logger.debug(f"Linear control around reference: |v|={out.l2_norm():.3e}, residual {residual:.2e}")
    return out


def project_Xf(ref: ReferenceTrajectory, raw: StateFrame) -> XfTarget:
    """
    phi^j - Re<phi^j, psi^j_ref> psi^j_ref - sum_{k<j} (<phi^j, psi^k_ref> + <psi^j_ref, phi^k>) psi^k_ref,
    all at the reference end time.
    """
    R = ref.endpoint.coeffs
    if raw.coeffs.shape != R.shape:
        raise InputError(f"Raw targets {raw.coeffs.shape} do not match the reference {R.shape}")
    if abs(raw.t - ref.endpoint.t) > 1e-9 * max(1.0, ref.endpoint.t):
        raise InputError(f"Raw targets at t={raw.t}, reference ends at {ref.endpoint.t}")
    tau = raw.coeffs @ np.conj(R.T)
    N = R.shape[0]
    A = np.zeros((N, N), dtype=complex)
    for j in range(N):
        A[j, j] = np.real(tau[j, j])
        for k in range(j):
            A[j, k] = tau[j, k] + np.conj(tau[k, j])
    return XfTarget(rows=raw.coeffs - A @ R, t=raw.t, reference=R)


def _check_targets(ref: ReferenceTrajectory, targets: StateFrame, radius_max: float) -> float:
    N = ref.N
    drift = float(np.max(np.abs(targets.gram() - np.eye(N))))
    if drift > _GRAM_TOL:
        raise CompatibilityError(f"Target Gram matrix differs from the identity by {drift:.3e}")
    R = ref.endpoint.coeffs
    overlap = np.real(np.sum(targets.coeffs * np.conj(R), axis=1))
    if np.any(overlap <= 0):
        raise TrustRegionError(f"Re<psi_f^j, psi^j_ref(T)> must be positive, got {overlap.tolist()}")
    distance = float(sum(weighted_h3_norm(row) for row in targets.coeffs - R))
    if distance > radius_max:
        raise TrustRegionError(f"Targets are {distance:.3e} away from the reference endpoint (radius {radius_max})")
    return distance


def solve_local_control(
    data: CouplingData,
    targets: StateFrame,
    variant: str = "N3_phase_delay",
    eta: float = 1e-2,
    ref: Optional[ReferenceTrajectory] = None,
    extra_time: float = 0.0,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
    radius_max: float = 1.0,
    **reference_kwargs,
) -> ControlSignal:
    """
    Control on [0, T_eta (+ extra_time)] steering (phi_1..phi_N) exactly to the targets.
    Newton on u -> P~(psi(T)) from u_ref with the derivative inverse frozen at u_ref; the full
    endpoint is checked afterwards.
    """
    if ref is None:
        ref = build_reference(data, eta, variant=variant, **reference_kwargs)
    ref = extend_reference(ref, extra_time, data)
    N = ref.N
    K = data.K_max
    if targets.coeffs.shape != (N, K):
        raise InputError(f"Targets {targets.coeffs.shape}, expected {(N, K)}")
    distance = _check_targets(ref, targets, radius_max)

    goal = project_Xf(ref, targets)
    frame = reference_frame_functions(ref, data)
    start = free_frame(N, K, 0.0)
    base = ref.control

    def evaluate(x: np.ndarray):
        u = ControlSignal(x, base.dt, base.t0, zero_tail=base.zero_tail)
        final = propagate(start, u, data).final
        residual = project_Xf(ref, final) - goal
        return residual.rows.ravel(), residual

    def step(x: np.ndarray, r: np.ndarray, residual: XfTarget) -> np.ndarray:
        correction = XfTarget(-residual.rows, residual.t, residual.reference)
        return linear_control_around_ref(ref, data, correction, frame).values

    x, history = damped_newton(evaluate, step, base.values, tol=tol, max_iter=max_iter, label="local control")
    u = ControlSignal(x, base.dt, base.t0, zero_tail=base.zero_tail)
    final = propagate(start, u, data).final
    error = float(np.max(np.linalg.norm(final.coeffs - targets.coeffs, axis=1)))
    if error > _ENDPOINT_TOL:
        raise NumericalError(f"Projected targets reached but the full endpoint is off by {error:.3e}")
    u.meta.update({
        "iterations": len(history) - 1,
        "residual_history": history,
        "endpoint_error": error,
        "target_distance": distance,
        "T_final": u.t_end,
        "theta_eta": ref.theta_eta,
    })
    logger.info(f"✅ Local control: {len(history) - 1} Newton steps, endpoint error {error:.2e}, |u|={u.l2_norm():.4g}")
    return u


# --- target families ---
def random_direction(K: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian H with unit spectral norm, entries damped like (k l)^{-3/2} to stay H^3-small."""
    G = rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K))
    H = 0.5 * (G + np.conj(G.T))
    damp = np.arange(1, K + 1, dtype=float) ** -1.5
    H = damp[:, None] * H * damp[None, :]
    return H / np.linalg.norm(H, 2)


def rotated_targets(ref: ReferenceTrajectory, H: np.ndarray, radius: float) -> StateFrame:
    """Rows of the reference endpoint rotated by exp(i radius H)."""
    U = hermitian_exponentials(-radius * H)
    R = ref.endpoint.coeffs
    return StateFrame(t=ref.endpoint.t, coeffs=R @ U.T)


def random_admissible_targets(ref: ReferenceTrajectory, radius: float, rng: np.random.Generator,
                              count: int = 1) -> List[StateFrame]:
    K = ref.endpoint.K
    return [rotated_targets(ref, random_direction(K, rng), radius) for _ in range(count)]


class RadiusReport(BaseModel):
    estimate: float = Field(..., description="Largest radius at which every direction converged")
    bracket: List[float]
    directions: int
    seed: int
    evaluations: List[Dict[str, Any]] = Field(default_factory=list)


def estimate_target_radius(
    ref: ReferenceTrajectory,
    data: CouplingData,
    r_lo: float = 1e-5,
    r_hi: float = 1e-1,
    directions: int = 3,
    seed: int = 0,
    bisections: int = 6,
    threads: int = 1,
) -> RadiusReport:
    """Log-scale bisection on the radius of rotated targets for which Newton still succeeds."""
    children = np.random.SeedSequence(seed).spawn(directions)
    Hs = [random_direction(data.K_max, np.random.default_rng(c)) for c in children]
    evaluations: List[Dict[str, Any]] = []

    def attempt(args) -> bool:
        H, radius = args
        try:
            solve_local_control(data, rotated_targets(ref, H, radius), ref=ref)
            return True
        except QwellBaseException as e:
            logger.debug(f"Radius {radius:.3e} failed: {e.message}")
            return False

    def succeeds(radius: float) -> bool:
        ok = all(map_sync(attempt, [(H, radius) for H in Hs], threads))
        evaluations.append({"radius": radius, "success": ok})
        return ok

    if not succeeds(r_lo):
        return RadiusReport(estimate=0.0, bracket=[0.0, r_lo], directions=directions, seed=seed, evaluations=evaluations)
    if succeeds(r_hi):
        return RadiusReport(estimate=r_hi, bracket=[r_hi, r_hi], directions=directions, seed=seed, evaluations=evaluations)
    lo, hi = r_lo, r_hi
    for _ in range(bisections):
        mid = float(np.sqrt(lo * hi))
        if succeeds(mid):
            lo = mid
        else:
            hi = mid
    logger.info(f"🔍 Target radius estimate {lo:.3e} (bracket [{lo:.3e}, {hi:.3e}])")
    return RadiusReport(estimate=lo, bracket=[lo, hi], directions=directions, seed=seed, evaluations=evaluations)
