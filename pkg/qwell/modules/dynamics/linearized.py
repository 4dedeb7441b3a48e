# qwell/modules/dynamics/linearized.py
import logging
from typing import Optional, Tuple

import numpy as np

from qwell.core.exceptions import InputError, IntegratorFailure
from qwell.modules.dynamics.propagator import _check_initial, _finish, coupling_steps, propagate_with_source
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import StateFrame, Trajectory, free_frame
from qwell.modules.spectral_core.coupling import CouplingData

logger = logging.getLogger("Qwell.Linearized")


def _reference_history(ref: Trajectory, v: ControlSignal) -> Tuple[ControlSignal, np.ndarray]:
    control = ref.control
    if control is None or control.kind != "constant":
        raise InputError("Linearization needs a reference driven by a piecewise-constant control")
    if v.kind != "constant" or not control.same_grid(v):
        raise InputError("Direction and reference control live on different grids")
    n = control.n_intervals
    if len(ref) not in (n + 1, n + 2):
        raise InputError(f"Reference stores {len(ref)} frames, expected one per grid node ({n + 1})")
    return control, ref.moving_coefficients()[: n + 1]


def propagate_linearized(ref: Trajectory, v: ControlSignal, Psi0: StateFrame, data: CouplingData) -> Trajectory:
    """
    i d/dt Psi^j = -Psi^j'' - u_ref mu Psi^j - v mu psi^j_ref.
    Exact tangent of the discrete propagator: dB_{n+1} = U_n (dB_n + i v_n unit_n b_n).
    """
    control, B_ref = _reference_history(ref, v)
    _check_initial(Psi0, control, data.K_max)
    n = control.n_intervals
    D = np.empty((n + 1,) + B_ref.shape[1:], dtype=complex)
    D[0] = Psi0.moving_coefficients()
    for n0, unit, U in coupling_steps(control, data.mu_mat):
        Ut = np.swapaxes(U, -1, -2)
        unit_t = np.swapaxes(unit, -1, -2)
        for i in range(U.shape[0]):
            m = n0 + i
            D[m + 1] = (D[m] + 1j * v.values[m] * (B_ref[m] @ unit_t[i])) @ Ut[i]
    if not np.all(np.isfinite(D[-1])):
        raise IntegratorFailure("Non-finite linearized state")
    meta = {"integrator": "discrete-tangent", "K_max": data.K_max, "intervals": n, "dt": control.dt}
    return _finish(D, control, meta)


def tangent_frame_weights(control: ControlSignal, mu_mat: np.ndarray, b0: np.ndarray):
    """
    Sensitivities of the endpoint in the frame transported by the reference:
    returns (weights, U_total, B) with weights[n, j, k] = (P_{n+1}^H unit_n b^j_{n+1})_k,
    P_m the propagator from t0 to t_m, so that a direction v moves the endpoint of row j by
    U_total @ (i sum_n v_n weights[n, j]) at first order.
    """
    if control.kind != "constant":
        raise InputError("Frame weights need a piecewise-constant control")
    n = control.n_intervals
    b0 = np.atleast_2d(np.asarray(b0, dtype=complex))
    N, K = b0.shape
    B = np.empty((n + 1, N, K), dtype=complex)
    B[0] = b0
    weights = np.empty((n, N, K), dtype=complex)
    P = np.eye(K, dtype=complex)
    for n0, unit, U in coupling_steps(control, mu_mat):
        Ut = np.swapaxes(U, -1, -2)
        unit_t = np.swapaxes(unit, -1, -2)
        for i in range(U.shape[0]):
            m = n0 + i
            B[m + 1] = B[m] @ Ut[i]
            P = U[i] @ P
            weights[m] = (B[m + 1] @ unit_t[i]) @ np.conj(P)
    return weights, P, B


def second_order_endpoint(v: ControlSignal, w: Optional[ControlSignal], data: CouplingData,
                          N: Optional[int] = None) -> Tuple[StateFrame, StateFrame]:
    """
    First and second order terms of psi(eps v + eps^2 w) around the eigenstates.
    Psi solves i Psi' = -Psi'' - v mu Phi_j; xi solves i xi' = -xi'' - v mu Psi - w mu Phi_j.
    Both are computed with propagate_with_source on the free dynamics.
    """
    N = data.N if N is None else N
    K = data.K_max
    if v.kind != "constant":
        raise InputError("Second order expansion needs a piecewise-constant v")
    if w is not None and (w.kind != "constant" or not v.same_grid(w)):
        raise InputError("w must share the grid of v")
    M = v.n_intervals
    dt = v.dt
    zero = ControlSignal(np.zeros(M), dt, v.t0)
    start = StateFrame.zeros(N, K, t=v.t0)
    rows = np.arange(N)

    f1 = np.empty((M, N, K), dtype=complex)
    units = []
    for n0, unit, _ in coupling_steps(zero, data.mu_mat):
        units.append((n0, unit))
        cols = np.swapaxes(unit[:, :, rows], 1, 2)
        f1[n0:n0 + unit.shape[0]] = v.values[n0:n0 + unit.shape[0], None, None] * cols / dt
    first = propagate_with_source(start, zero, f1, data)
    B1 = first.moving_coefficients()

    f2 = np.empty_like(f1)
    wv = np.zeros(M) if w is None else w.values
    for n0, unit in units:
        stop = n0 + unit.shape[0]
        mid = 0.5 * (B1[n0:stop] + B1[n0 + 1:stop + 1])
        drive = np.einsum("nkl,njl->njk", unit, mid) * v.values[n0:stop, None, None]
        cols = np.swapaxes(unit[:, :, rows], 1, 2) * wv[n0:stop, None, None]
        f2[n0:stop] = (drive + cols) / dt
    second = propagate_with_source(start, zero, f2, data)
    logger.debug(f"Second order endpoint over T={v.T:.6g}: |xi|={np.linalg.norm(second.final.coeffs):.3e}")
    return first.final, second.final


def free_reference(N: int, control: ControlSignal, data: CouplingData) -> Trajectory:
    """Eigenstate trajectory (Phi_1, ..., Phi_N) on the grid of control, with a zero control attached."""
    zero = ControlSignal(np.zeros(control.n_intervals), control.dt, control.t0, zero_tail=control.zero_tail)
    times = zero.nodes if zero.zero_tail == 0 else np.append(zero.nodes, zero.t_end)
    coeffs = np.stack([free_frame(N, data.K_max, t).coeffs for t in times])
    return Trajectory(times=times, coeffs=coeffs, control=zero, meta={"integrator": "free"})
