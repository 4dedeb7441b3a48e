# qwell/tests/test_obstruction.py
"""Second-order forms, coercivity at short horizons and the nonlinear sign experiments."""
import logging

import numpy as np
import pytest

from qwell.core.exceptions import InputError
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import free_frame
from qwell.modules.obstruction import (
    coercivity_scan,
    combined_form,
    combined_form_parts,
    expansion_order_check,
    forbidden_target,
    form_matrix,
    kernel_h,
    quadratic_form_calQ,
    quadratic_form_Q,
    rayleigh_max_at,
    reachability_experiment,
    signed_functional,
)
from qwell.modules.obstruction.forms import combination_weights
from qwell.modules.spectral_core.basis import BasisSpec, eigenvalues
from qwell.modules.spectral_core.coupling import build_coupling_data
from qwell.modules.spectral_core.dipole import DipoleMoment

from qwell.tests.conftest import cubic_grad


def _zero_mean_wiggle(T: float, M: int) -> ControlSignal:
    v = ControlSignal.from_function(lambda t: np.cos(3.0 * t / T) + 0.4 * np.sin(11.0 * t / T), T, M)
    return ControlSignal(v.values - v.values.mean(), v.dt)


@pytest.mark.parametrize("j", [1, 2])
def test_Q_and_calQ_differ_by_truncated_sum_rule(data2, j):
    """With s(T) = 0, Q(v) - calQ(s) = (g_j - sum_k w_k <mu phi_j, phi_k>^2) ||s||^2 at the same truncation."""
    v = _zero_mean_wiggle(0.5, 512)
    s = v.primitive()
    assert abs(s.values[-1]) < 1e-14
    K = 16
    lam = eigenvalues(K)
    row = data2.coupling_row(j, K)
    partial = float(np.sum((lam - lam[j - 1]) * row ** 2))
    expected = (data2.grad_diag[j - 1] - partial) * s.l2_norm() ** 2
    diff = quadratic_form_Q(v, data2, j, T=0.5, K_trunc=K) - quadratic_form_calQ(s, data2, j, T=0.5, K_trunc=K)
    assert diff == pytest.approx(expected, rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("j", [1, 2, 3])
def test_sum_rule_recovers_squared_gradient(data3, j):
    """sum_k (lambda_k - lambda_j) <mu phi_j, phi_k>^2 -> <(mu')^2 phi_j, phi_j>."""
    K = 1024
    lam = eigenvalues(K)
    row = data3.coupling_row(j, K)
    assert float(np.sum((lam - lam[j - 1]) * row ** 2)) == pytest.approx(cubic_grad(j), abs=1e-6)


def test_form_horizon_must_match(data2):
    """Forms refuse a signal on another horizon."""
    with pytest.raises(InputError):
        quadratic_form_Q(ControlSignal.zeros(0.5, 8), data2, 1, T=1.0)


def test_form_matrix_reproduces_combined_form(data2, rng):
    """s^T A s equals the combined form of the piecewise-constant s."""
    T, n = 0.3, 24
    values = rng.standard_normal(n)
    A = form_matrix(data2, T, n, "N2", 32)
    direct = combined_form(ControlSignal(values, T / n), data2, T=T, variant="N2", K_trunc=32)
    assert float(values @ A @ values) == pytest.approx(direct, rel=1e-9, abs=1e-12)
    assert np.allclose(A, A.T)


def test_short_horizon_rayleigh_quotient_approaches_minus_A(data2):
    """For tiny T the kernel part is negligible and the largest quotient is about -A."""
    value = rayleigh_max_at(data2, 1e-4, resolution=64, variant="N2")
    assert value < 0
    assert value == pytest.approx(-data2.A_scalar, rel=0.05)


def test_three_particle_form_is_coercive_at_tiny_horizon(data3):
    """The N3 combination is weighted by -B and stays negative at T = 1e-5."""
    value = rayleigh_max_at(data3, 1e-5, resolution=64, variant="N3")
    assert value < 0
    assert value == pytest.approx(-data3.B_scalar, rel=0.05)


def test_coercivity_scan_reports_largest_negative_horizon(data2):
    """Every scanned horizon is negative here, so the estimate is the largest one."""
    report = coercivity_scan(data2, [2e-4, 5e-5, 1e-4], resolution=32, variant="N2", K_trunc=64)
    assert report.T_grid == [5e-5, 1e-4, 2e-4]
    assert all(r < 0 for r in report.rayleigh_max)
    assert report.T_star_est == pytest.approx(2e-4)
    assert report.T_star_bracket == [2e-4, None]
    assert report.applicable and not report.degenerate
    assert report.samples_tested == 3 * 32


def test_coercivity_scan_not_applicable_for_constant_dipole():
    """mu = 1 has no gradient, A = 0, and the scan is flagged degenerate."""
    data = build_coupling_data(DipoleMoment.polynomial([1.0]), BasisSpec(K_max=8), N=2)
    report = coercivity_scan(data, [0.1, 0.2], resolution=8, K_trunc=8)
    assert report.degenerate
    assert not report.applicable
    assert report.T_star_est is None


def test_kernel_h_samples_match_direct_sum(data2):
    """h_1 on a uniform grid, starting at h_1(0) = 0, with no decay warning for x^3."""
    table = kernel_h(data2, 1, K_trunc=64, grid=(0.1, 50))
    assert table.times.size == 51
    assert table.samples[0] == 0.0
    lam = eigenvalues(64)
    row = data2.coupling_row(1, 64)
    w = lam[1:] - lam[0]
    t = table.times[17]
    assert table.samples[17] == pytest.approx(float(np.sum(w ** 2 * row[1:] ** 2 * np.sin(w * t))), rel=1e-12)
    assert table.tail_bound > 0
    assert table.warnings == []


def test_forbidden_target_moves_last_particle_phase(data2):
    """The forbidden direction shows up in the signed functional as d_1 delta for N2."""
    target = forbidden_target(data2, 0.5, 0.3)
    assert np.allclose(target.gram(), np.eye(2), atol=1e-13)
    assert np.allclose(target.coeffs[0], free_frame(2, data2.K_max, 0.5).coeffs[0], atol=1e-13)
    assert signed_functional(target, data2, "N2") == pytest.approx(data2.diag[0] * 0.3, rel=1e-12)
    with pytest.raises(InputError):
        forbidden_target(data2, 0.5, 1.5)


def test_expansion_orders(data2):
    """Im <psi~^1, Phi_1> grows like eps^2 and matches eps^2 calQ up to eps^3."""
    report = expansion_order_check(data2, 1, 0.1, eps_list=(0.2, 0.1, 0.05), M=4096)
    assert 1.8 < report.slope_im < 2.2
    assert report.slope_residual >= 2.8
    assert report.warnings == []


def test_expansion_rejects_shape_not_vanishing_at_start(data2):
    """The primitive must start at zero."""
    with pytest.raises(InputError):
        expansion_order_check(data2, 1, 0.1, s_shape=lambda t: np.cos(t), eps_list=(0.1, 0.05), M=64)


@pytest.mark.slow
def test_small_controls_never_produce_forbidden_sign(data2):
    """Random small V_T controls at a short horizon keep the signed functional negative."""
    report = reachability_experiment(data2, 1e-4, variant="N2", trials=16, seed=7, budget=10.0, M=256)
    assert report.violations == 0
    assert report.ratio_max is not None and report.ratio_max < 0
    assert report.V_T_modes >= 1
    assert report.zero_trials == 0
    assert report.forbidden_margin is not None and report.forbidden_margin > 0


def _kernel_bound(data, variant: str, K: int) -> float:
    """sum_j |c_j| sup|h_j|, bounded by sum_k (lambda_k - lambda_j)^2 <mu phi_j, phi_k>^2 at truncation K."""
    lam = eigenvalues(K)
    total = 0.0
    for j, c in combination_weights(data, variant).items():
        row = data.coupling_row(j, K)
        total += abs(c) * float(np.sum((lam - lam[j - 1]) ** 2 * row ** 2))
    return total


@pytest.mark.parametrize("variant, fixture", [("N2", "data2"), ("N3", "data3")])
def test_combined_form_coefficient_is_minus_scalar(variant, fixture, request):
    data = request.getfixturevalue(fixture)
    s = ControlSignal.from_function(lambda t: 1.0 + np.sin(7.0 * t), 0.05, 64)
    coef, kernel = combined_form_parts(s, data, T=0.05, variant=variant, K_trunc=32)
    scalar = data.A_scalar if variant == "N2" else data.B_scalar
    assert coef == pytest.approx(-scalar, rel=1e-10, abs=1e-12)
    whole = combined_form(s, data, T=0.05, variant=variant, K_trunc=32)
    assert whole == pytest.approx(coef * s.l2_norm() ** 2 + kernel, rel=1e-12, abs=1e-14)


@pytest.mark.slow
@pytest.mark.parametrize("variant, fixture", [("N2", "data2"), ("N3", "data3")])
def test_kernel_part_bounded_by_horizon_times_norm(variant, fixture, request):
    """|kernel part| <= C T ||s||^2 with one C across horizons, and kernel / (T ||s||^2) settles under refinement."""
    data = request.getfixturevalue(fixture)
    K = 64
    C = _kernel_bound(data, variant, K)
    for T in (1e-3, 1e-2, 0.1):
        ratios = []
        for M in (256, 512):
            s = ControlSignal.from_function(lambda t: 1.0 + t / T + 0.5 * np.cos(5.0 * t / T), T, M)
            _, kernel = combined_form_parts(s, data, T=T, variant=variant, K_trunc=K)
            norm2 = s.l2_norm() ** 2
            assert abs(kernel) <= C * T * norm2 * (1.0 + 1e-9)
            ratios.append(kernel / (T * norm2))
        assert abs(ratios[0] - ratios[1]) <= 0.05 * C


@pytest.mark.slow
@pytest.mark.parametrize("variant, fixture", [("N2", "data2"), ("N3", "data3")])
def test_coercivity_agrees_across_resolutions(variant, fixture, request):
    """Below T = |scalar| / (100 C) the largest quotient sits within 1% of -|scalar| at 256 and 512 intervals."""
    data = request.getfixturevalue(fixture)
    K = 64
    scalar = data.A_scalar if variant == "N2" else data.B_scalar
    T0 = 0.01 * abs(scalar) / _kernel_bound(data, variant, K)
    T_grid = [0.25 * T0, 0.5 * T0, T0]
    coarse = coercivity_scan(data, T_grid, resolution=256, variant=variant, K_trunc=K)
    fine = coercivity_scan(data, T_grid, resolution=512, variant=variant, K_trunc=K)
    assert all(r < 0 for r in coarse.rayleigh_max + fine.rayleigh_max)
    for lo, hi in zip(coarse.rayleigh_max, fine.rayleigh_max):
        assert hi == pytest.approx(lo, rel=0.05)
        assert hi >= lo - 1e-8 * abs(lo)
    assert fine.T_star_est == pytest.approx(T0)


def test_reachability_flags_horizon_past_coercivity_estimate(data2, caplog):
    """Trials at or past the scanned horizon are reported and logged; below it nothing is flagged."""
    kwargs = dict(variant="N2", trials=2, seed=3, budget=10.0, M=64)
    with caplog.at_level(logging.WARNING, logger="Qwell.Obstruction"):
        past = reachability_experiment(data2, 1e-4, T_star=5e-5, **kwargs)
    assert past.T_star == pytest.approx(5e-5)
    assert past.below_T_star is False
    assert len(past.warnings) == 1
    assert "coercivity horizon" in caplog.text

    below = reachability_experiment(data2, 1e-4, T_star=2e-4, **kwargs)
    assert below.below_T_star is True
    assert below.warnings == []

    unchecked = reachability_experiment(data2, 1e-4, **kwargs)
    assert unchecked.T_star is None and unchecked.below_T_star is None
