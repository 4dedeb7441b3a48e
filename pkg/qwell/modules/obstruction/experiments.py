# qwell/modules/obstruction/experiments.py
import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from qwell.core.config import settings
from qwell.core.exceptions import InputError
from qwell.core.workers import map_sync
from qwell.modules.dynamics.auxiliary import aux_first_order, aux_transform, propagate_auxiliary
from qwell.modules.dynamics.propagator import propagate
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import StateFrame, free_frame
from qwell.modules.moment_solver.solver import project_VT, vt_window
from qwell.modules.obstruction.forms import combination_weights, obstruction_scalar, quadratic_form_calQ
from qwell.modules.spectral_core.basis import eigenvalues
from qwell.modules.spectral_core.coupling import CouplingData

logger = logging.getLogger("Qwell.Obstruction")

_VARIANT_PARTICLES = {"N2": 2, "N3": 3}


def _particles(variant: str) -> int:
    try:
        return _VARIANT_PARTICLES[variant]
    except KeyError:
        raise InputError(f"Unknown obstruction variant: {variant}")


def _slope(eps: Sequence[float], values: Sequence[float]) -> Optional[float]:
    values = np.abs(np.asarray(values, dtype=float))
    if np.any(values == 0) or len(values) < 2:
        return None
    return float(np.polyfit(np.log(eps), np.log(values), 1)[0])


class ExpansionReport(BaseModel):
    j: int
    T: float
    eps: List[float]
    calQ: float = Field(..., description="Q_{T,j}(s_shape) at the propagation truncation")
    im_values: List[float]
    residuals: List[float]
    first_order_errors: List[float]
    slope_im: Optional[float] = None
    slope_residual: Optional[float] = None
    slope_first_order: Optional[float] = None
    warnings: List[str] = Field(default_factory=list)


def expansion_order_check(
    data: CouplingData,
    j: int,
    T: float,
    s_shape: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    eps_list: Sequence[float] = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3),
    M: Optional[int] = None,
) -> ExpansionReport:
    """
    Propagates the auxiliary system at s = eps s_shape and compares Im<psi~^j(T), Phi_j(T)>
    with eps^2 Q_{T,j}(s_shape) and psi~^j with Phi_j + eps Psi~^j.
    """
    M = settings.QWELL_GRID_INTERVALS if M is None else int(M)
    if s_shape is None:
        s_shape = lambda t: np.sin(np.pi * t / T)
    base = ControlSignal.from_function(s_shape, T, M, kind="linear")
    if abs(base.values[0]) > 1e-12:
        raise InputError("The primitive shape must vanish at t = 0")
    base.values[0] = 0.0
    K = data.K_max
    start = StateFrame(t=0.0, coeffs=free_frame(j, K, 0.0).coeffs[j - 1:j])

    warnings: List[str] = []
    if min(eps_list) ** 3 < 1e-15:
        msg = f"eps={min(eps_list):.1e} pushes the third-order residual below floating-point resolution"
        warnings.append(msg)
        logger.warning(f"⚠️ {msg}")

    calQ = quadratic_form_calQ(base, data, j, K_trunc=K)
    first = aux_first_order(base, data, N=j).moving_coefficients()[j - 1]
    e_j = np.zeros(K, dtype=complex)
    e_j[j - 1] = 1.0

    im_values, residuals, first_errors = [], [], []
    for eps in eps_list:
        traj = propagate_auxiliary(base.scaled(eps), data.mu, start, data.basis)
        b = traj.final.moving_coefficients()[0]
        im = float(np.imag(b[j - 1]))
        im_values.append(im)
        residuals.append(abs(im - eps ** 2 * calQ))
        first_errors.append(float(np.linalg.norm(b - e_j - eps * first)))

    report = ExpansionReport(
        j=j,
        T=T,
        eps=list(eps_list),
        calQ=calQ,
        im_values=im_values,
        residuals=residuals,
        first_order_errors=first_errors,
        slope_im=_slope(eps_list, im_values),
        slope_residual=_slope(eps_list, residuals),
        slope_first_order=_slope(eps_list, first_errors),
        warnings=warnings,
    )
    logger.info(f"🔍 Expansion check j={j}: slopes im={report.slope_im}, residual={report.slope_residual}")
    return report


def signed_functional(frame: StateFrame, data: CouplingData, variant: str = "N2") -> float:
    """sum_j c_j Im<psi^j(T), Phi_j(T)> with the combined-form coefficients c_j."""
    b = frame.moving_coefficients()
    weights = combination_weights(data, variant)
    if frame.N < max(weights):
        raise InputError(f"Variant {variant} needs {max(weights)} particles, frame has {frame.N}")
    return float(sum(c * np.imag(b[j - 1, j - 1]) for j, c in weights.items()))


def direction_sign(data: CouplingData, variant: str = "N2") -> float:
    """alpha = sign(A <mu phi_1, phi_1>) for N2, beta = sign(B (<mu phi_2, phi_2> - <mu phi_1, phi_1>)) for N3."""
    d = data.diag
    value = data.A_scalar * d[0] if variant == "N2" else data.B_scalar * (d[1] - d[0])
    return 1.0 if value >= 0 else -1.0


def forbidden_target(data: CouplingData, T: float, delta: float, theta: float = 0.0,
                     variant: str = "N2", nu: float = 0.0) -> StateFrame:
    """e^{i nu} (Phi_1(T) e^{i theta mu}, ..., (sqrt(1 - delta^2) + i sign delta) Phi_N(T) e^{i theta mu})."""
    if not 0 <= delta <= 1:
        raise InputError(f"delta must lie in [0, 1], got {delta}")
    N = _particles(variant)
    frame = free_frame(N, data.K_max, T)
    frame.coeffs[N - 1] *= np.sqrt(1.0 - delta ** 2) + 1j * direction_sign(data, variant) * delta
    frame = aux_transform(frame, theta, data.mu, "inverse")
    return StateFrame(t=T, coeffs=np.exp(1j * nu) * frame.coeffs)


def band_limited_control(rng: np.random.Generator, T: float, M: int, modes: int = 16, t0: float = 0.0) -> ControlSignal:
    """Random combination of the first `modes` Fourier modes on [t0, t0 + T]."""
    a = rng.standard_normal(modes)
    b = rng.standard_normal(modes)
    m = np.arange(1, modes + 1)

    def shape(t):
        phase = 2.0 * np.pi * (np.asarray(t)[..., None] - t0) * m / T
        return np.cos(phase) @ a + np.sin(phase) @ b

    return ControlSignal.from_function(shape, T, M, t0=t0)


class ReachabilityReport(BaseModel):
    variant: str
    T: float
    trials: int
    seed: int
    budget: float
    V_T_modes: int
    scalar: float
    direction_sign: float
    violations: int = 0
    zero_trials: int = 0
    skipped: int = 0
    ratio_max: Optional[float] = Field(None, description="max sign * T(s) / ||s||^2 over nonzero trials")
    ratio_min: Optional[float] = None
    C_star_fit: Optional[float] = Field(None, description="-ratio_max: empirical constant in T(s) <= -C ||s||^2")
    max_V_T_residual: float = 0.0
    forbidden_margin: Optional[float] = Field(None, description="sign * T of the forbidden target at delta = ||s||^2 scale")
    T_star: Optional[float] = Field(None, description="Coercivity horizon estimate T is compared against")
    below_T_star: Optional[bool] = None
    warnings: List[str] = Field(default_factory=list)
    per_trial: List[Dict] = Field(default_factory=list)


def _reachability_trial(data: CouplingData, T: float, variant: str, seed_seq: np.random.SeedSequence,
                        budget: float, amplitude: Sequence[float], modes: int, M: int, K_window: int) -> Dict:
    rng = np.random.default_rng(seed_seq)
    v = project_VT(band_limited_control(rng, T, M, modes), K_window)
    norm = v.l2_norm()
    target = budget * rng.uniform(*amplitude)
    if norm == 0.0:
        return {"status": "zero", "functional": 0.0}
    v = v.scaled(target / norm)
    if v.l2_norm() > budget:
        return {"status": "skipped", "u_norm": v.l2_norm()}
    N = _particles(variant)
    traj = propagate(free_frame(N, data.K_max, 0.0), v, data)
    functional = signed_functional(traj.final, data, variant)
    s_norm = v.primitive().l2_norm()
    sign = 1.0 if obstruction_scalar(data, variant) >= 0 else -1.0
    if s_norm == 0.0:
        return {"status": "zero", "functional": functional}
    lam = eigenvalues(K_window)
    residual = float(np.max(np.abs(v.moments(lam - lam[0]))))
    return {
        "status": "ok",
        "u_norm": v.l2_norm(),
        "s_norm": s_norm,
        "functional": functional,
        "ratio": sign * functional / s_norm ** 2,
        "V_T_residual": residual,
    }


def reachability_experiment(
    data: CouplingData,
    T: float,
    variant: str = "N2",
    trials: int = 200,
    seed: Optional[int] = None,
    budget: float = 0.1,
    amplitude: Sequence[float] = (0.2, 1.0),
    modes: int = 16,
    M: Optional[int] = None,
    K_window: Optional[int] = None,
    threads: int = 1,
    T_star: Optional[float] = None,
) -> ReachabilityReport:
    """
    Random small V_T controls through the full nonlinear system: a sign-definite signed functional
    means the forbidden direction (alpha delta for N2, beta delta for N3) is never produced.
    The sign is only expected below the coercivity horizon; pass the scan estimate as T_star to have
    the report flag horizons at or past it.
    """
    seed = settings.QWELL_DEFAULT_SEED if seed is None else int(seed)
    M = settings.QWELL_GRID_INTERVALS if M is None else int(M)
    scalar = obstruction_scalar(data, variant)
    if K_window is None:
        K_window = vt_window(T, data.K_max, M)
    seeds = np.random.SeedSequence(seed).spawn(trials)
    results = map_sync(
        lambda sq: _reachability_trial(data, T, variant, sq, budget, amplitude, modes, M, K_window),
        seeds,
        threads,
    )

    ok = [r for r in results if r["status"] == "ok"]
    ratios = [r["ratio"] for r in ok]
    report = ReachabilityReport(
        variant=variant,
        T=T,
        trials=trials,
        seed=seed,
        budget=budget,
        V_T_modes=K_window,
        scalar=scalar,
        direction_sign=direction_sign(data, variant),
        violations=sum(1 for r in ratios if r >= 0),
        zero_trials=sum(1 for r in results if r["status"] == "zero"),
        skipped=sum(1 for r in results if r["status"] == "skipped"),
        ratio_max=max(ratios) if ratios else None,
        ratio_min=min(ratios) if ratios else None,
        C_star_fit=-max(ratios) if ratios else None,
        max_V_T_residual=max((r["V_T_residual"] for r in ok), default=0.0),
        per_trial=results,
    )
    if T_star is not None:
        report.T_star = float(T_star)
        report.below_T_star = bool(T < T_star)
        if not report.below_T_star:
            msg = f"T={T} is not below the coercivity horizon estimate {T_star}; violations are not excluded"
            report.warnings.append(msg)
            logger.warning(f"⚠️ {msg}")
    if ok:
        delta = float(np.median([r["s_norm"] ** 2 for r in ok]))
        forbidden = forbidden_target(data, T, min(delta, 1.0), variant=variant)
        sign = 1.0 if scalar >= 0 else -1.0
        report.forbidden_margin = sign * signed_functional(forbidden, data, variant)
    if report.violations:
        logger.warning(f"⚠️ {report.violations} sign violations in {len(ok)} trials at T={T}")
    else:
        logger.info(f"✅ No sign violations in {len(ok)} trials at T={T} ({variant})")
    return report
