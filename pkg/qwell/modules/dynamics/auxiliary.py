# qwell/modules/dynamics/auxiliary.py
"""
Auxiliary system: psi = psi~ e^{i s mu} with s the primitive of u removes u from the equation,
leaving i d/dt psi~ = -psi~'' - i s (2 mu' d/dx + mu'') psi~ + s^2 (mu')^2 psi~.
"""
import logging
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.linalg import eigh

from qwell.core.exceptions import EigenSolveError, InputError
from qwell.modules.dynamics.phase import PhaseTable
from qwell.modules.dynamics.propagator import CHUNK, _check_initial, _finish, hermitian_exponentials
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import StateFrame, Trajectory
from qwell.modules.spectral_core.basis import BasisSpec, eigenvalues
from qwell.modules.spectral_core.coupling import CouplingData, coupling_matrix, gradient_matrix, transport_matrix
from qwell.modules.spectral_core.dipole import DipoleMoment

logger = logging.getLogger("Qwell.Auxiliary")

_S0_TOL = 1e-12


@lru_cache(maxsize=16)
def galerkin_operators(mu: DipoleMoment, K: int, quadrature_order: int = 16) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(M, D, G): Galerkin matrices of mu, 2 mu' d/dx + mu'' and (mu')^2 on modes 1..K."""
    M = coupling_matrix(mu, K, quadrature_order)
    D = transport_matrix(M)
    G = gradient_matrix(mu, K, quadrature_order)
    for name, mat in (("mu", M), ("transport", D), ("squared gradient", G)):
        if not np.all(np.isfinite(mat)):
            raise InputError(f"Galerkin matrix of {name} has non-finite entries")
    return M, D, G


@lru_cache(maxsize=16)
def _multiplier_eigensystem(mu: DipoleMoment, K: int, quadrature_order: int):
    M = coupling_matrix(mu, K, quadrature_order)
    try:
        return eigh(M)
    except np.linalg.LinAlgError as e:
        raise EigenSolveError(f"Multiplier diagonalization failed: {e}")


def aux_transform(frame: StateFrame, s_val: float, mu: DipoleMoment, direction: str = "forward",
                  quadrature_order: int = 16) -> StateFrame:
    """forward: psi -> psi e^{-i s mu}; inverse: psi~ -> psi~ e^{i s mu}, as unitary K x K matrices."""
    if direction not in ("forward", "inverse"):
        raise InputError(f"Unknown transform direction: {direction}")
    if s_val == 0.0:
        return frame.copy()
    w, V = _multiplier_eigensystem(mu, frame.K, quadrature_order)
    sign = -1.0 if direction == "forward" else 1.0
    E = (V * np.exp(1j * sign * s_val * w)[None, :]) @ V.T
    return StateFrame(t=frame.t, coeffs=frame.coeffs @ E)


def propagate_auxiliary(s: ControlSignal, mu: DipoleMoment, psi0: StateFrame, spec: BasisSpec) -> Trajectory:
    """Propagates psi~ for a piecewise-linear primitive s with s(t0) = 0."""
    if s.kind != "linear":
        raise InputError("The auxiliary system is driven by a piecewise-linear primitive")
    if abs(s.values[0]) > _S0_TOL:
        raise InputError(f"Primitive must vanish at the start, got s(t0)={s.values[0]:.3e}")
    K = spec.K_max
    _check_initial(psi0, s, K)
    _, D, G = galerkin_operators(mu, K, spec.quadrature_order)

    table = PhaseTable(eigenvalues(K), s.dt, order=2)
    a, b = s.interval_coefficients()
    starts = s.interval_starts
    n = s.n_intervals
    B = np.empty((n + 1, psi0.N, K), dtype=complex)
    B[0] = psi0.moving_coefficients()
    for n0 in range(0, n, CHUNK):
        sl = slice(n0, min(n, n0 + CHUNK))
        S1 = table.integrals(starts[sl], [a[sl], b[sl]])
        S2 = table.integrals(starts[sl], [a[sl] ** 2, 2.0 * a[sl] * b[sl], b[sl] ** 2])
        H = -1j * D[None] * S1 + G[None] * S2
        Ut = np.swapaxes(hermitian_exponentials(H), -1, -2)
        for i in range(Ut.shape[0]):
            B[n0 + i + 1] = B[n0 + i] @ Ut[i]
    meta = {"integrator": "interval-magnus-auxiliary", "K_max": K, "intervals": n, "dt": s.dt}
    traj = _finish(B, s, meta)
    logger.debug(f"Auxiliary propagation over T={s.T:.6g}, s(T)={s.values[-1]:.4g}")
    return traj


def aux_first_order(s: ControlSignal, data: CouplingData, N: int = None) -> StateFrame:
    """
    First order term of psi~ around the eigenstates: Psi~ = Psi - i s(T) mu Phi_j(T),
    with Psi the first order term of the original system for v = s'.
    """
    if s.kind != "linear":
        raise InputError("aux_first_order expects a piecewise-linear primitive")
    N = data.N if N is None else N
    K = data.K_max
    lam = eigenvalues(K)
    v = s.derivative()
    T_end = s.grid_end
    omega = lam[None, :] - lam[:N, None]
    moments = v.moments(omega)
    M = data.mu_mat[:N, :]
    moving = 1j * M * moments - 1j * s.values[-1] * M * np.exp(1j * omega * T_end)
    return StateFrame.from_moving(moving, T_end)
