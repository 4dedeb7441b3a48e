# qwell/modules/obstruction/forms.py
"""
Second-order forms around the eigenstates.

For piecewise-polynomial x every double integral int_0^T x(t) int_0^t x(tau) sin(w (t - tau))
splits into cross-interval products Im(F_n conj F_m) of exact interval moments and a
same-interval triangle term, so the forms carry no quadrature error.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from qwell.core.config import settings
from qwell.core.exceptions import InputError
from qwell.modules.dynamics.phase import power_phase_integrals, triangle_phase_moments
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.spectral_core.basis import eigenvalues
from qwell.modules.spectral_core.coupling import CouplingData, grad_coupling_coefficient

logger = logging.getLogger("Qwell.Obstruction")

_CHUNK = 256


def causal_sine_form(x: ControlSignal, omegas: np.ndarray, weights: np.ndarray, chunk: int = _CHUNK) -> float:
    """sum_k weights_k int_0^T x(t) int_0^t x(tau) sin(omega_k (t - tau)) dtau dt."""
    omegas = np.asarray(omegas, dtype=float)
    weights = np.asarray(weights, dtype=float)
    a, b = x.interval_coefficients()
    starts = x.interval_starts
    saa, sab, sbb = np.dot(a, a), np.dot(a, b), np.dot(b, b)
    total = 0.0
    for i0 in range(0, omegas.size, chunk):
        w = omegas[i0:i0 + chunk]
        z = 1j * w
        I0, I1 = power_phase_integrals(z, x.dt, order=1)
        F = np.exp(1j * np.outer(w, starts)) * (a[None, :] * I0[:, None] + b[None, :] * I1[:, None])
        before = np.cumsum(F, axis=1) - F
        cross = np.imag(np.sum(F * np.conj(before), axis=1))
        A00, A10, A01, A11 = triangle_phase_moments(z, x.dt)
        same = np.imag(A00 * saa + (A10 + A01) * sab + A11 * sbb)
        total += float(np.dot(weights[i0:i0 + chunk], cross + same))
    return total


def _mode_window(data: CouplingData, j: int, K_trunc: int) -> Tuple[np.ndarray, np.ndarray]:
    """(omega_k, <mu phi_j, phi_k>) for k = 1..K_trunc, k != j."""
    lam = eigenvalues(K_trunc)
    row = data.coupling_row(j, K_trunc)
    keep = np.arange(K_trunc) != j - 1
    return lam[keep] - lam[j - 1], row[keep]


def grad_diag_entry(data: CouplingData, j: int) -> float:
    if j <= data.grad_diag.size:
        return float(data.grad_diag[j - 1])
    return grad_coupling_coefficient(data.mu, j, data.basis)


@dataclass
class KernelTable:
    """Samples of h_j(t) = sum_k (lambda_k - lambda_j)^2 <mu phi_j, phi_k>^2 sin((lambda_k - lambda_j) t)."""
    j: int
    times: np.ndarray
    samples: np.ndarray
    K_trunc: int
    tail_bound: float
    decay_constant: float
    warnings: List[str] = field(default_factory=list)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.samples.size else 0.0


def coupling_decay_constant(row: np.ndarray, K: int) -> Tuple[float, float]:
    """max |<mu phi_j, phi_k>| k^3 over k in [K/2, K] and over [K/4, K/2]."""
    k = np.arange(1, K + 1, dtype=float)
    scaled = np.abs(row[:K]) * k ** 3
    hi = float(np.max(scaled[max(0, K // 2 - 1):]))
    lo = float(np.max(scaled[max(0, K // 4 - 1):max(1, K // 2)]))
    return hi, lo


def kernel_h(data: CouplingData, j: int, K_trunc: Optional[int] = None, grid=None) -> KernelTable:
    """
    h_j on the given times (array, or (T, points) for a uniform grid of [0, T]).
    Tail bound pi^4 c^2 / K_trunc from the model |<mu phi_j, phi_k>| <= c / k^3.
    """
    K_trunc = settings.QWELL_KERNEL_TRUNCATION if K_trunc is None else int(K_trunc)
    if grid is None:
        grid = (1.0, settings.QWELL_SCAN_RESOLUTION)
    if isinstance(grid, tuple):
        T, points = grid
        times = np.linspace(0.0, float(T), int(points) + 1)
    else:
        times = np.asarray(grid, dtype=float)
    omegas, row = _mode_window(data, j, K_trunc)
    weights = omegas ** 2 * row ** 2
    samples = np.sin(np.outer(times, omegas)) @ weights

    full_row = data.coupling_row(j, K_trunc)
    c_hi, c_lo = coupling_decay_constant(full_row, K_trunc)
    warnings = []
    if c_lo > 0 and c_hi > 2.0 * c_lo:
        msg = f"Couplings of row {j} decay slower than k^-3 on [{K_trunc // 4}, {K_trunc}]; kernel tail bound unreliable"
        warnings.append(msg)
        logger.warning(f"⚠️ {msg}")
    return KernelTable(
        j=j,
        times=times,
        samples=samples,
        K_trunc=K_trunc,
        tail_bound=float(np.pi ** 4 * c_hi ** 2 / K_trunc),
        decay_constant=c_hi,
        warnings=warnings,
    )


def quadratic_form_Q(v: ControlSignal, data: CouplingData, j: int, T: Optional[float] = None,
                     K_trunc: Optional[int] = None) -> float:
    """Q_{T,j}(v) = int v(t) int_0^t v(tau) sum_k <mu phi_j, phi_k>^2 sin((lambda_k - lambda_j)(t - tau))."""
    _check_horizon(v, T)
    K_trunc = settings.QWELL_KERNEL_TRUNCATION if K_trunc is None else int(K_trunc)
    omegas, row = _mode_window(data, j, K_trunc)
    return causal_sine_form(v, omegas, row ** 2)


def quadratic_form_calQ(s: ControlSignal, data: CouplingData, j: int, T: Optional[float] = None,
                        K_trunc: Optional[int] = None) -> float:
    """-<(mu')^2 phi_j, phi_j> int s^2 + int s(t) int_0^t s(tau) h_j(t - tau)."""
    _check_horizon(s, T)
    K_trunc = settings.QWELL_KERNEL_TRUNCATION if K_trunc is None else int(K_trunc)
    omegas, row = _mode_window(data, j, K_trunc)
    return -grad_diag_entry(data, j) * s.l2_norm() ** 2 + causal_sine_form(s, omegas, omegas ** 2 * row ** 2)


def _check_horizon(x: ControlSignal, T: Optional[float]) -> None:
    if T is not None and abs(x.T - T) > 1e-9 * max(1.0, T):
        raise InputError(f"Signal spans {x.T}, form requested on a horizon of {T}")


def combination_weights(data: CouplingData, variant: str) -> Dict[int, float]:
    """Coefficients of Q_{T,j} in the combined form; they weigh ||s||^2 by -A (N2) or -B (N3)."""
    d = data.diag
    if variant == "N2":
        return {1: -float(d[1]), 2: float(d[0])}
    if variant == "N3":
        return {1: float(d[2] - d[1]), 2: float(d[0] - d[2]), 3: float(d[1] - d[0])}
    raise InputError(f"Unknown obstruction variant: {variant}")


def obstruction_scalar(data: CouplingData, variant: str) -> float:
    return data.A_scalar if variant == "N2" else data.B_scalar


def combined_form_parts(s: ControlSignal, data: CouplingData, T: Optional[float] = None, variant: str = "N2",
                        K_trunc: Optional[int] = None) -> Tuple[float, float]:
    """(coefficient of ||s||^2, kernel part): combined form = coefficient ||s||^2 + kernel part."""
    _check_horizon(s, T)
    K_trunc = settings.QWELL_KERNEL_TRUNCATION if K_trunc is None else int(K_trunc)
    coef = 0.0
    kernel = 0.0
    for j, c in combination_weights(data, variant).items():
        if c == 0.0:
            continue
        omegas, row = _mode_window(data, j, K_trunc)
        coef -= c * grad_diag_entry(data, j)
        kernel += c * causal_sine_form(s, omegas, omegas ** 2 * row ** 2)
    return coef, kernel


def combined_form(s: ControlSignal, data: CouplingData, T: Optional[float] = None, variant: str = "N2",
                  K_trunc: Optional[int] = None) -> float:
    coef, kernel = combined_form_parts(s, data, T, variant, K_trunc)
    return coef * s.l2_norm() ** 2 + kernel
