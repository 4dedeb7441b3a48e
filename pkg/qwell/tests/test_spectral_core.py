# qwell/tests/test_spectral_core.py
"""Eigenbasis, coupling coefficients and the hypothesis checks, against closed forms for mu = x^3 and mu = x."""
import numpy as np
import pytest
from scipy.integrate import trapezoid

from qwell.core.exceptions import InputError
from qwell.modules.spectral_core.basis import BasisSpec, eigenfunction, eigenvalues
from qwell.modules.spectral_core.coupling import (
    build_coupling_data,
    coupling_coefficient,
    coupling_matrix,
    grad_coupling_coefficient,
)
from qwell.modules.spectral_core.dipole import DipoleMoment
from qwell.modules.spectral_core.hypotheses import DEGENERATE, SATISFIED, VIOLATED, hypotheses_report

from qwell.tests.conftest import CUBIC_A, CUBIC_B, C, cubic_diag, cubic_grad


def test_eigenvalues_are_squares_of_k_pi():
    """lambda_k = (k pi)^2."""
    assert np.allclose(eigenvalues(4), [np.pi ** 2, 4 * np.pi ** 2, 9 * np.pi ** 2, 16 * np.pi ** 2])


def test_eigenfunctions_are_orthonormal():
    """Trapezoid inner products of phi_1..phi_4 give the identity."""
    x = np.linspace(0.0, 1.0, 4001)
    phi = np.array([eigenfunction(k, x) for k in range(1, 5)])
    gram = trapezoid(phi[:, None, :] * phi[None, :, :], x, axis=-1)
    assert np.allclose(gram, np.eye(4), atol=1e-6)


def test_basis_rejects_out_of_range_modes():
    """Mode 0 and modes beyond K_max are input errors."""
    basis = BasisSpec(K_max=8)
    with pytest.raises(InputError):
        basis.require_mode(0)
    with pytest.raises(InputError):
        basis.eigenvalue(9)


def test_basis_needs_room_for_particles():
    """K_max must be at least N + 2."""
    with pytest.raises(InputError):
        build_coupling_data(DipoleMoment.cubic(), BasisSpec(K_max=4), N=3)


@pytest.mark.parametrize("j", [1, 2, 3, 7])
def test_cubic_diagonal_matches_closed_form(cubic, j):
    """<x^3 phi_j, phi_j> = 1/4 - 3 / (4 j^2 pi^2)."""
    assert coupling_coefficient(cubic, j, j) == pytest.approx(cubic_diag(j), abs=1e-13)


@pytest.mark.parametrize("j", [1, 2, 3])
def test_cubic_squared_gradient_matches_closed_form(cubic, j):
    """<(mu')^2 phi_j, phi_j> for mu = x^3."""
    assert grad_coupling_coefficient(cubic, j) == pytest.approx(cubic_grad(j), abs=1e-12)


def test_cubic_scalars_match_closed_form(data3):
    """A, B and the two diagonal combinations in closed form."""
    assert data3.A_scalar == pytest.approx(CUBIC_A, rel=1e-10)
    assert data3.B_scalar == pytest.approx(CUBIC_B, rel=1e-8)
    assert data3.combo_531 == pytest.approx(-2.5 * C, rel=1e-10)
    assert data3.combo_41 == pytest.approx(0.75 - 2.8125 * C, rel=1e-10)
    assert data3.A_scalar == pytest.approx(0.037884, abs=5e-6)


def test_coupling_matrix_is_symmetric(cubic):
    """<mu phi_j, phi_k> = <mu phi_k, phi_j>."""
    mat = coupling_matrix(cubic, 12)
    assert np.allclose(mat, mat.T, atol=1e-15)


def test_linear_dipole_known_couplings():
    """mu = x: <x phi_1, phi_2> = -16 / (9 pi^2) and <x phi_1, phi_3> = 0."""
    mu = DipoleMoment.polynomial([0.0, 1.0])
    assert coupling_coefficient(mu, 1, 2) == pytest.approx(-16.0 / (9.0 * np.pi ** 2), abs=1e-14)
    assert abs(coupling_coefficient(mu, 1, 3)) < 1e-14
    assert coupling_coefficient(mu, 2, 2) == pytest.approx(0.5, abs=1e-14)


def test_constant_dipole_gives_identity():
    """mu = 1 couples nothing off the diagonal."""
    mat = coupling_matrix(DipoleMoment.polynomial([1.0]), 8)
    assert np.allclose(mat, np.eye(8), atol=1e-14)


def test_coupling_is_linear_in_mu(cubic):
    """<(a mu + nu) phi_j, phi_k> = a <mu phi_j, phi_k> + <nu phi_j, phi_k>."""
    nu = DipoleMoment.polynomial([0.3, -1.0, 2.0])
    combo = cubic.scaled(2.5) + nu
    expected = 2.5 * coupling_matrix(cubic, 10) + coupling_matrix(nu, 10)
    assert np.allclose(coupling_matrix(combo, 10), expected, atol=1e-13)


def test_sampled_dipole_matches_polynomial(cubic):
    """A quintic spline through x^3 samples reproduces the exact couplings."""
    x = np.linspace(0.0, 1.0, 41)
    sampled = DipoleMoment.from_samples(x, x ** 3, spline_degree=5)
    exact = coupling_matrix(cubic, 8)
    approx = coupling_matrix(sampled, 8, quadrature_order=32)
    assert np.allclose(approx, exact, atol=1e-10)


def test_sampled_dipole_validation():
    """Non-finite samples, short spans and low spline degrees are rejected."""
    x = np.linspace(0.0, 1.0, 10)
    with pytest.raises(InputError):
        DipoleMoment.from_samples(x, np.where(x > 0.5, np.nan, x))
    with pytest.raises(InputError):
        DipoleMoment.from_samples(np.linspace(0.1, 1.0, 10), x)
    with pytest.raises(InputError):
        DipoleMoment.from_samples(x, x, spline_degree=2)


def test_polynomial_dipole_rejects_non_finite():
    """inf coefficients are input errors."""
    with pytest.raises(InputError):
        DipoleMoment.polynomial([0.0, np.inf])


def test_dipole_spec_roundtrip(cubic):
    """to_spec / from_spec give back an equal profile."""
    assert DipoleMoment.from_spec(cubic.to_spec()) == cubic


def test_cubic_hypotheses_all_satisfied(data3):
    """Every condition holds numerically for mu = x^3."""
    report = hypotheses_report(data3)
    assert all(v == SATISFIED for v in report.verdicts.values())
    assert report.decay.c_hat > 1e-3
    assert report.decay.window == (3, 16)
    assert len(report.grad_diag) == 3


def test_linear_dipole_hypotheses(linear_data):
    """mu = x: vanishing couplings violate the decay bound and A degenerates."""
    report = hypotheses_report(linear_data)
    assert report.verdicts["coupling_decay"] == VIOLATED
    assert report.verdicts["A_scalar"] == DEGENERATE
    assert report.verdicts["diag_gap"] == DEGENERATE
    assert report.decay.c_hat < 1e-10


def test_zero_dipole_is_degenerate():
    """mu = 0 degenerates every condition."""
    data = build_coupling_data(DipoleMoment.polynomial([0.0]), BasisSpec(K_max=8), N=2)
    report = hypotheses_report(data)
    assert all(v == DEGENERATE for v in report.verdicts.values())
