# qwell/modules/dynamics/propagator.py
"""
Galerkin propagation in the moving frame b_k = <psi, Phi_k(t)>.

Over interval n the coupling generator is integrated exactly against the control:
W_n = M o int u(t) e^{i (lambda_k - lambda_l) t} dt, and the step is b <- exp(i W_n) b.
W_n is Hermitian, so every step is unitary up to roundoff and the free phases are exact.
"""
import logging
from typing import Iterator, Optional, Tuple

import numpy as np

from qwell.core.config import settings
from qwell.core.exceptions import EigenSolveError, InputError, IntegratorFailure
from qwell.modules.dynamics.phase import PhaseTable
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import StateFrame, Trajectory
from qwell.modules.spectral_core.basis import eigenvalues
from qwell.modules.spectral_core.coupling import CouplingData

logger = logging.getLogger("Qwell.Propagator")

CHUNK = 256
_STEP_ANGLE_WARNING = 0.5
_TIME_TOL = 1e-9


def hermitian_exponentials(H: np.ndarray) -> np.ndarray:
    """exp(-i H) for a stack of Hermitian matrices via unitary diagonalization."""
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as e:
        raise EigenSolveError(f"Step diagonalization failed: {e}")
    return (V * np.exp(-1j * w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def coupling_steps(control: ControlSignal, coupling: np.ndarray,
                   chunk: int = CHUNK) -> Iterator[Tuple[int, Optional[np.ndarray], np.ndarray]]:
    """
    Yields (n0, unit, U) per chunk of intervals: U_n = exp(i W_n) and, for piecewise-constant
    controls, the unit generator unit_n = M o int e^{i Omega t} with W_n = u_n unit_n.
    """
    K = coupling.shape[0]
    table = PhaseTable(eigenvalues(K), control.dt, order=1)
    a, b = control.interval_coefficients()
    starts = control.interval_starts
    n = control.n_intervals
    for n0 in range(0, n, chunk):
        sl = slice(n0, min(n, n0 + chunk))
        if control.kind == "constant":
            unit = coupling[None] * table.integrals(starts[sl], [np.ones(sl.stop - n0)])
            W = a[sl, None, None] * unit
        else:
            unit = None
            W = coupling[None] * table.integrals(starts[sl], [a[sl], b[sl]])
        yield n0, unit, hermitian_exponentials(-W)


def _check_initial(psi0: StateFrame, control: ControlSignal, K: int) -> None:
    if psi0.K != K:
        raise InputError(f"State has {psi0.K} modes, coupling data has {K}")
    if abs(psi0.t - control.t0) > _TIME_TOL * max(1.0, abs(control.t0)):
        raise InputError(f"State time {psi0.t} does not match control start {control.t0}")


def _finish(B: np.ndarray, control: ControlSignal, meta: dict) -> Trajectory:
    """Moving-frame history -> Schrodinger-frame trajectory, appending the zero tail exactly."""
    times = control.nodes
    if control.zero_tail > 0:
        times = np.append(times, control.t_end)
        B = np.concatenate([B, B[-1:]], axis=0)
    K = B.shape[2]
    phases = np.exp(-1j * np.outer(times, eigenvalues(K)))
    traj = Trajectory(times=times, coeffs=B * phases[:, None, :], control=control, meta=meta)
    tail = traj.tail_mass()
    meta["tail_mass"] = tail
    if tail > settings.QWELL_TAIL_WARNING:
        msg = f"Tail mass {tail:.3e} above {settings.QWELL_TAIL_WARNING:.0e}; rerun with K_max={2 * K}"
        meta.setdefault("warnings", []).append(msg)
        logger.warning(f"⚠️ {msg}")
    return traj


def _march(b0: np.ndarray, control: ControlSignal, coupling: np.ndarray,
           source: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
    n = control.n_intervals
    N, K = b0.shape
    B = np.empty((n + 1, N, K), dtype=complex)
    B[0] = b0
    half = 0.5j * control.dt
    max_angle = 0.0
    for n0, unit, U in coupling_steps(control, coupling):
        Ut = np.swapaxes(U, -1, -2)
        for i in range(U.shape[0]):
            m = n0 + i
            nxt = B[m] @ Ut[i]
            if source is not None:
                nxt = nxt + half * (source[m] @ Ut[i] + source[m])
            B[m + 1] = nxt
        if unit is not None:
            scale = np.abs(control.values[n0:n0 + U.shape[0]])
            max_angle = max(max_angle, float(np.max(scale * np.max(np.abs(unit), axis=(1, 2)))) * K)
        if not np.all(np.isfinite(B[n0 + U.shape[0]])):
            raise IntegratorFailure(f"Non-finite state at interval {n0 + U.shape[0]}")
    return B, max_angle


def propagate(psi0: StateFrame, u: ControlSignal, data: CouplingData) -> Trajectory:
    """Nonlinear Galerkin system i d/dt psi^j = -psi^j'' - u(t) mu psi^j, one frame per grid node."""
    K = data.K_max
    _check_initial(psi0, u, K)
    B, max_angle = _march(psi0.moving_coefficients(), u, data.mu_mat)
    meta = {
        "integrator": "interval-magnus",
        "K_max": K,
        "intervals": u.n_intervals,
        "dt": u.dt,
        "zero_tail": u.zero_tail,
        "max_step_angle": max_angle,
    }
    if max_angle > _STEP_ANGLE_WARNING:
        msg = f"Per-step coupling angle {max_angle:.3f} is large; refine the control grid"
        meta.setdefault("warnings", []).append(msg)
        logger.warning(f"⚠️ {msg}")
    traj = _finish(B, u, meta)
    logger.debug(f"Propagated {psi0.N} particles over T={u.T:.6g} (M={u.n_intervals}, drift={traj.gram_drift():.2e})")
    return traj


def propagate_with_source(psi0: StateFrame, u: ControlSignal, f: np.ndarray, data: CouplingData) -> Trajectory:
    """
    i d/dt psi = -psi'' - u mu psi - f, with f given by its coefficients against Phi_k(t),
    piecewise constant on the control grid: shape (M, N, K), or (M, K) shared by all rows.
    """
    K = data.K_max
    _check_initial(psi0, u, K)
    f = np.asarray(f, dtype=complex)
    M = u.n_intervals
    if f.ndim == 2:
        f = np.broadcast_to(f[:, None, :], (M, psi0.N, K))
    if f.shape != (M, psi0.N, K):
        raise InputError(f"Source shape {f.shape} does not match (M, N, K) = {(M, psi0.N, K)}")
    if not np.all(np.isfinite(f)):
        raise InputError("Source has non-finite samples")
    B, _ = _march(psi0.moving_coefficients(), u, data.mu_mat, source=f)
    meta = {"integrator": "interval-magnus+trapezoid-source", "K_max": K, "intervals": M, "dt": u.dt}
    return _finish(B, u, meta)
