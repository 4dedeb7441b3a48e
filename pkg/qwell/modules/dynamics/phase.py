# qwell/modules/dynamics/phase.py
"""Exact integrals of polynomial x oscillatory integrands over one control interval.

Everything piecewise in this package (controls, primitives, sources) is integrated against
e^{i omega t} through these tables, so moment residuals and propagation carry no quadrature error.
"""

import numpy as np

_SERIES_SWITCH = 0.5
_SERIES_TERMS = 30


def power_phase_integrals(z: np.ndarray, dt: float, order: int = 2) -> np.ndarray:
    """
    I_p(z) = int_0^dt tau^p e^{z tau} dtau for p = 0..order, stacked on axis 0.
    Taylor series below |z dt| < 0.5, recurrence I_p = (dt^p e^{z dt} - p I_{p-1}) / z above.
    """
    z = np.asarray(z, dtype=complex)
    zd = z * dt
    small = np.abs(zd) < _SERIES_SWITCH
    out = np.empty((order + 1,) + z.shape, dtype=complex)

    z_safe = np.where(small, 1.0, z)
    e = np.exp(z * dt)
    prev = (e - 1.0) / z_safe
    out[0] = prev
    for p in range(1, order + 1):
        prev = (dt ** p * e - p * prev) / z_safe
        out[p] = prev

    if np.any(small):
        zs = zd[small]
        for p in range(order + 1):
            acc = np.zeros(zs.shape, dtype=complex)
            term = np.ones(zs.shape, dtype=complex)
            for m in range(_SERIES_TERMS):
                acc += term / (m + p + 1)
                term = term * zs / (m + 1)
            out[p][small] = dt ** (p + 1) * acc
    return out


def triangle_phase_moments(z: np.ndarray, dt: float):
    """
    A_pq(z) = int_0^dt int_0^sigma sigma^p rho^q e^{z (sigma - rho)} drho dsigma for
    (p, q) in {(0,0), (1,0), (0,1), (1,1)}: the same-interval part of a causal double integral.
    """
    z = np.asarray(z, dtype=complex)
    zd = z * dt
    small = np.abs(zd) < _SERIES_SWITCH
    z_safe = np.where(small, 1.0, z)

    I0, I1, I2 = power_phase_integrals(z, dt, order=2)
    A00 = (I0 - dt) / z_safe
    A10 = (I1 - dt ** 2 / 2.0) / z_safe
    int_J1 = (I1 - A00) / z_safe
    A01 = A10 - int_J1
    int_sJ1 = (I2 - A10) / z_safe
    A11 = (I2 - dt ** 3 / 3.0) / z_safe - int_sJ1

    if np.any(small):
        zs = zd[small]
        s00 = np.zeros(zs.shape, dtype=complex)
        s10 = np.zeros_like(s00)
        s01 = np.zeros_like(s00)
        s11 = np.zeros_like(s00)
        term = np.ones(zs.shape, dtype=complex)
        for m in range(_SERIES_TERMS):
            s00 += term / ((m + 1) * (m + 2))
            s10 += term / ((m + 1) * (m + 3))
            s01 += term / ((m + 1) * (m + 2) * (m + 3))
            s11 += term / ((m + 1) * (m + 2) * (m + 4))
            term = term * zs / (m + 1)
        A00[small] = dt ** 2 * s00
        A10[small] = dt ** 3 * s10
        A01[small] = dt ** 3 * s01
        A11[small] = dt ** 4 * s11
    return A00, A10, A01, A11


class PhaseTable:
    """
    Interval integrals of e^{i (lambda_k - lambda_l) t} on a uniform grid:
    int_{t_n}^{t_n+dt} tau^p e^{i Omega_kl t} dt = e^{i Omega_kl t_n} I_p(i Omega_kl).
    """

    def __init__(self, lambdas: np.ndarray, dt: float, order: int = 1):
        self.lambdas = np.asarray(lambdas, dtype=float)
        self.dt = float(dt)
        self.omega = self.lambdas[:, None] - self.lambdas[None, :]
        self.I = power_phase_integrals(1j * self.omega, self.dt, order)

    def phases(self, t: np.ndarray) -> np.ndarray:
        """e^{i Omega_kl t} for a vector of times, shape (len(t), K, K)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        left = np.exp(1j * np.outer(t, self.lambdas))
        return left[:, :, None] * np.conj(left)[:, None, :]

    def integrals(self, t: np.ndarray, coeffs) -> np.ndarray:
        """
        int over [t_n, t_n + dt] of (c0 + c1 tau + c2 tau^2)(t) e^{i Omega t} for each n.
        coeffs: sequence of per-interval arrays c0, c1, ... (length <= table order + 1).
        """
        ph = self.phases(t)
        acc = np.zeros_like(ph)
        for p, c in enumerate(coeffs):
            c = np.asarray(c, dtype=float)
            if not np.any(c):
                continue
            acc += c[:, None, None] * self.I[p][None, :, :]
        return ph * acc


