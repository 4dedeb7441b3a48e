# qwell/modules/spectral_core/coupling.py
"""Dipole coupling coefficients <mu phi_j, phi_k> and the scalars built from them."""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.special import roots_legendre

from qwell.core.exceptions import InputError
from qwell.modules.spectral_core.basis import BasisSpec, eigenvalues
from qwell.modules.spectral_core.dipole import DipoleMoment, Profile

logger = logging.getLogger("Qwell.Coupling")


def cosine_integrals(profile: Profile, a: np.ndarray, quadrature_order: int = 16) -> np.ndarray:
    """
    int_0^1 p(x) cos(a pi x) dx for integer a >= 0.

    Polynomials use the exact antiderivative expansion
    int p e^{ibx} = sum_m (-1)^m (ib)^{-(m+1)} [p^(m)(1) e^{ib} - p^(m)(0)];
    other profiles use composite Gauss-Legendre with at least one panel per half-period.
    """
    a = np.abs(np.asarray(a, dtype=int))
    out = np.zeros(a.shape, dtype=float)
    if profile.poly is not None:
        p = profile.poly
        zero = a == 0
        if np.any(zero):
            primitive = p.integ()
            out[zero] = primitive(1.0) - primitive(0.0)
        nz = ~zero
        if np.any(nz):
            b = a[nz] * np.pi
            sign = np.where(a[nz] % 2 == 0, 1.0, -1.0)
            acc = np.zeros(b.shape)
            for m in range(1, p.degree() + 1, 2):
                dm = p.deriv(m)
                coef = (-1.0) ** m * (-1.0) ** ((m + 1) // 2)
                acc += coef * (dm(1.0) * sign - dm(0.0)) / b ** (m + 1)
            out[nz] = acc
        return out

    max_a = int(a.max()) if a.size else 0
    panels = max(8, max_a // 2 + 8)
    t, w = roots_legendre(quadrature_order)
    edges = np.arange(panels) / panels
    x = (edges[:, None] + (t[None, :] + 1.0) / (2.0 * panels)).ravel()
    wx = np.tile(w / (2.0 * panels), panels)
    fx = profile(x) * wx
    if not np.all(np.isfinite(fx)):
        raise InputError("Dipole profile evaluates to non-finite values")
    flat = a.ravel()
    vals = np.cos(np.pi * np.outer(flat, x)) @ fx
    return vals.reshape(a.shape)


def sin_sin_integrals(profile: Profile, js, ks, quadrature_order: int = 16) -> np.ndarray:
    """int_0^1 p(x) 2 sin(j pi x) sin(k pi x) dx on the outer grid js x ks."""
    js = np.atleast_1d(np.asarray(js, dtype=int))
    ks = np.atleast_1d(np.asarray(ks, dtype=int))
    if np.any(js < 1) or np.any(ks < 1):
        raise InputError("Mode indices start at 1")
    diff = np.abs(js[:, None] - ks[None, :])
    total = js[:, None] + ks[None, :]
    return cosine_integrals(profile, diff, quadrature_order) - cosine_integrals(profile, total, quadrature_order)


def coupling_coefficient(mu: DipoleMoment, j: int, k: int, basis: Optional[BasisSpec] = None) -> float:
    """<mu phi_j, phi_k>, symmetric in (j, k)."""
    if basis is not None:
        basis.require_mode(j)
        basis.require_mode(k)
    order = basis.quadrature_order if basis is not None else 16
    return float(sin_sin_integrals(mu.as_profile(), [j], [k], order)[0, 0])


def coupling_row(mu: DipoleMoment, j: int, ks: Sequence[int], quadrature_order: int = 16) -> np.ndarray:
    return sin_sin_integrals(mu.as_profile(), [j], ks, quadrature_order)[0]


def coupling_matrix(mu: DipoleMoment, K: int, quadrature_order: int = 16) -> np.ndarray:
    idx = np.arange(1, K + 1)
    mat = sin_sin_integrals(mu.as_profile(), idx, idx, quadrature_order)
    return 0.5 * (mat + mat.T)


def grad_coupling_coefficient(mu: DipoleMoment, j: int, basis: Optional[BasisSpec] = None) -> float:
    """<(mu')^2 phi_j, phi_j> >= 0."""
    if basis is not None:
        basis.require_mode(j)
    order = basis.quadrature_order if basis is not None else 16
    return float(sin_sin_integrals(mu.squared_gradient(), [j], [j], order)[0, 0])


def gradient_matrix(mu: DipoleMoment, K: int, quadrature_order: int = 16) -> np.ndarray:
    """Galerkin matrix of multiplication by (mu')^2."""
    idx = np.arange(1, K + 1)
    mat = sin_sin_integrals(mu.squared_gradient(), idx, idx, quadrature_order)
    return 0.5 * (mat + mat.T)


def transport_matrix(mu_mat: np.ndarray) -> np.ndarray:
    """
    Galerkin matrix of 2 mu' d/dx + mu''. From [-d^2/dx^2, mu] = -(2 mu' d/dx + mu'')
    its entries are D_kl = (lambda_l - lambda_k) <mu phi_l, phi_k>: real antisymmetric.
    """
    lam = eigenvalues(mu_mat.shape[0])
    return (lam[None, :] - lam[:, None]) * mu_mat


@dataclass
class CouplingData:
    """Coupling matrix plus the scalar combinations the controllability conditions are stated in."""
    mu: DipoleMoment
    basis: BasisSpec
    N: int
    mu_mat: np.ndarray
    grad_diag: np.ndarray
    A_scalar: float
    B_scalar: float
    combo_531: float
    combo_41: float
    diag_gap: float
    _rows: Dict[tuple, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def K_max(self) -> int:
        return self.basis.K_max

    @property
    def lambdas(self) -> np.ndarray:
        return eigenvalues(self.K_max)

    @property
    def diag(self) -> np.ndarray:
        """<mu phi_j, phi_j> for j = 1..K_max."""
        return np.diag(self.mu_mat).copy()

    def coupling_row(self, j: int, K: int) -> np.ndarray:
        """<mu phi_j, phi_k> for k = 1..K, beyond K_max when kernels need longer series."""
        if K <= self.K_max:
            return self.mu_mat[j - 1, :K].copy()
        key = (j, K)
        if key not in self._rows:
            self._rows[key] = coupling_row(self.mu, j, np.arange(1, K + 1), self.basis.quadrature_order)
        return self._rows[key]

    def scalars(self) -> Dict[str, float]:
        return {
            "A_scalar": self.A_scalar,
            "B_scalar": self.B_scalar,
            "combo_531": self.combo_531,
            "combo_41": self.combo_41,
            "diag_gap": self.diag_gap,
        }


def build_coupling_data(mu: DipoleMoment, spec: BasisSpec, N: int) -> CouplingData:
    if N not in (1, 2, 3):
        raise InputError(f"N must be 1, 2 or 3, got {N}")
    spec.require_particles(N)
    mu_mat = coupling_matrix(mu, spec.K_max, spec.quadrature_order)
    if not np.all(np.isfinite(mu_mat)):
        raise InputError("Coupling matrix has non-finite entries")
    n_grad = max(N, 3)
    grad = sin_sin_integrals(mu.squared_gradient(), np.arange(1, n_grad + 1), np.arange(1, n_grad + 1), spec.quadrature_order)
    g = np.diag(grad).copy()
    d = np.diag(mu_mat)[:3]
    data = CouplingData(
        mu=mu,
        basis=spec,
        N=N,
        mu_mat=mu_mat,
        grad_diag=g,
        A_scalar=float(d[0] * g[1] - d[1] * g[0]),
        B_scalar=float((d[2] - d[1]) * g[0] + (d[0] - d[2]) * g[1] + (d[1] - d[0]) * g[2]),
        combo_531=float(5 * d[0] - 8 * d[1] + 3 * d[2]),
        combo_41=float(4 * d[0] - d[1]),
        diag_gap=float(d[0] - d[1]),
    )
    logger.debug(f"Built coupling data: K_max={spec.K_max}, N={N}, A={data.A_scalar:.6g}, B={data.B_scalar:.6g}")
    return data
