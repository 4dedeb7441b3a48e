# qwell/tests/test_return_method.py
"""
Return method: phase/delay bookkeeping, the Newton driver, tangent-space targets, and full
reference builds with local exact control around them (the latter marked slow).
"""
from types import SimpleNamespace

import numpy as np
import pytest

from qwell.core.exceptions import (
    CompatibilityError,
    ConfigError,
    ConstraintViolationError,
    DegenerateFamilyError,
    InputError,
    NewtonDivergenceError,
    TrustRegionError,
)
from qwell.modules.dynamics.linearized import propagate_linearized
from qwell.modules.dynamics.states import StateFrame, free_frame
from qwell.modules.return_method import (
    XfTarget,
    build_reference,
    eta_sweep,
    family_verdict,
    linear_control_around_ref,
    load_reference_bundle,
    phase_delay_solve,
    project_Xf,
    random_admissible_targets,
    riesz_gap,
    save_reference_bundle,
    solve_local_control,
    stage1_control,
)
from qwell.modules.return_method.newton import damped_newton
from qwell.modules.return_method.reference import normalize_variant, wrap_angle
from qwell.modules.spectral_core.basis import eigenvalues

PERIOD = 2.0 / np.pi


def _raw_perturbation(ref, rng, scale=1e-3) -> StateFrame:
    end = ref.endpoint
    noise = rng.standard_normal(end.coeffs.shape) + 1j * rng.standard_normal(end.coeffs.shape)
    damp = np.arange(1, end.K + 1, dtype=float) ** -2
    return StateFrame(t=end.t, coeffs=scale * noise * damp[None, :])


# --- phases and delays ---
def test_three_particle_delay_recovers_planted_time():
    """theta_j = theta* - lambda_j T* gives T_eta = T* + 2/pi (first admissible time after T1)."""
    lam = eigenvalues(3)
    thetas = wrap_angle(0.4 - lam * 0.37)
    T_eta, theta_eta, residuals = phase_delay_solve(thetas, lam, T1=1.0, variant="N3")
    assert T_eta == pytest.approx(0.37 + PERIOD, abs=1e-10)
    assert theta_eta == pytest.approx(0.4, abs=1e-9)
    assert np.max(np.abs(residuals)) < 1e-9


def test_three_particle_delay_rejects_incompatible_phases():
    """Phases violating 5 theta_1 - 8 theta_2 + 3 theta_3 = 0 [2 pi] cannot be aligned."""
    with pytest.raises(ConstraintViolationError) as exc:
        phase_delay_solve(np.array([0.1, 0.2, 0.3]), T1=1.0, variant="N3")
    assert exc.value.exit_code == 3


def test_two_particle_phase_variant_needs_equal_phases():
    """N2_phase aligns in time when theta_1 = theta_2."""
    T_eta, theta_eta, _ = phase_delay_solve(np.array([0.3, 0.3]), T1=1.0, variant="N2_phase")
    assert T_eta == 1.0
    assert theta_eta == pytest.approx(0.3)
    with pytest.raises(ConstraintViolationError):
        phase_delay_solve(np.array([0.3, 0.5]), T1=1.0, variant="N2_phase")


def test_two_particle_delay_variant():
    """4 theta_1 = theta_2: one free delay of at most 2/pi closes both phases."""
    lam = eigenvalues(2)
    T_eta, theta_eta, residuals = phase_delay_solve(np.array([0.2, 0.8]), lam, T1=1.0, variant="N2_delay")
    assert 1.0 < T_eta <= 1.0 + PERIOD
    assert theta_eta == 0.0
    assert np.max(np.abs(residuals)) < 1e-10


def test_phase_count_must_match_variant():
    """Two phases for a three-particle variant is an input error."""
    with pytest.raises(InputError):
        phase_delay_solve(np.array([0.1, 0.2]), variant="N3_phase_delay")


def test_variant_aliases():
    """N3 is shorthand for the phase-delay construction."""
    assert normalize_variant("N3") == "N3_phase_delay"
    with pytest.raises(InputError):
        normalize_variant("N4")


# --- stage 1 guards ---
def test_stage1_zero_eta_is_zero_control(data3):
    """eta = 0 needs no control on (eps/2, eps)."""
    v = stage1_control(data3, 0.0, 0.3, 0.2)
    assert v.t0 == pytest.approx(0.15)
    assert v.t_end == pytest.approx(0.3)
    assert np.all(v.values == 0.0)


def test_stage1_eta_beyond_budget(data3):
    """eta above eta_max is outside the trust region."""
    with pytest.raises(TrustRegionError):
        stage1_control(data3, 0.5, 0.3, 0.2, eta_max=0.1)


def test_stage1_checkpoint_order(data3):
    """eps1 must lie strictly between eps/2 and eps."""
    with pytest.raises(InputError):
        stage1_control(data3, 1e-2, 0.3, 0.1)


# --- Newton driver ---
def test_damped_newton_converges():
    """x^2 = 2 from x = 1."""
    x, history = damped_newton(
        lambda x: (x ** 2 - 2.0, 2.0 * x),
        lambda x, r, J: -r / J,
        np.array([1.0]),
        tol=1e-12,
        max_iter=20,
    )
    assert x[0] == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert history[-1] <= 1e-12
    assert history == sorted(history, reverse=True)


def test_damped_newton_reports_divergence():
    """A step that never lowers the residual ends with the residual history attached."""
    with pytest.raises(NewtonDivergenceError) as exc:
        damped_newton(lambda x: (x ** 2 + 1.0, None), lambda x, r, ctx: np.array([1.0]), np.array([1.0]), tol=1e-10, max_iter=5)
    assert exc.value.residual_history[0] == pytest.approx(2.0)
    assert exc.value.exit_code == 4


# --- tangent-space targets ---
def test_project_Xf_lands_in_tangent_space(rng):
    """Projected rows satisfy both invariants and projecting again changes nothing."""
    ref = SimpleNamespace(endpoint=free_frame(3, 8, 0.5))
    raw = StateFrame(t=0.5, coeffs=rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8)))
    target = project_Xf(ref, raw)
    assert target.invariant_residual() <= 1e-12
    again = project_Xf(ref, StateFrame(t=0.5, coeffs=target.rows))
    assert np.allclose(again.rows, target.rows, atol=1e-13)


def test_Xf_target_rejects_rows_outside_tangent_space(rng):
    """Raw rows generally break Re<phi^j, psi^j_ref> = 0."""
    R = free_frame(2, 6, 0.2).coeffs
    with pytest.raises(InputError):
        XfTarget(rows=R + 0.1 * rng.standard_normal(R.shape), t=0.2, reference=R)


def test_project_Xf_time_must_match(rng):
    """Targets at another time than the reference end are rejected."""
    ref = SimpleNamespace(endpoint=free_frame(2, 6, 0.5))
    with pytest.raises(InputError):
        project_Xf(ref, StateFrame(t=0.4, coeffs=np.zeros((2, 6), dtype=complex)))


# --- full reference builds ---
@pytest.fixture(scope="module")
def reference3(data3_small):
    return build_reference(data3_small, 1e-2, variant="N3", M=2048)


@pytest.fixture(scope="module")
def reference3_milli(data3_small):
    return build_reference(data3_small, 1e-3, variant="N3", M=2048)


@pytest.mark.slow
def test_reference_meets_construction_properties(reference3):
    """Checkpoint expectations, phase alignment and the ideal endpoint all hold on the assembled control."""
    ref = reference3
    assert ref.variant == "N3_phase_delay"
    assert ref.residuals["conditions"] <= 1e-9 * 1.01
    assert ref.residuals["endpoint"] <= 1e-6
    assert ref.residuals["phase"] <= 1e-8
    assert ref.residuals["gram_drift"] < 1e-10
    assert ref.T1 < ref.T_eta <= ref.T1 + PERIOD + 1e-12
    assert ref.control.t_end == pytest.approx(ref.T_eta)
    assert ref.residuals["control_ratio"] > 0


@pytest.mark.slow
def test_linear_control_hits_tangent_target(reference3, data3_small, rng):
    """The linearization around the reference reaches a projected target exactly."""
    ref = reference3
    target = project_Xf(ref, _raw_perturbation(ref, rng))
    v = linear_control_around_ref(ref, data3_small, target)
    Psi = propagate_linearized(ref.traj, v, StateFrame.zeros(3, data3_small.K_max, t=0.0), data3_small).final
    assert np.allclose(Psi.coeffs, target.rows, atol=1e-6)


@pytest.mark.slow
def test_reference_endpoint_needs_no_iteration(reference3, data3_small):
    """Asking for the reference endpoint itself returns the reference control."""
    u = solve_local_control(data3_small, reference3.endpoint, ref=reference3)
    assert u.meta["iterations"] == 0
    assert u.meta["endpoint_error"] <= 1e-12
    assert np.allclose(u.values, reference3.control.values)


@pytest.mark.slow
def test_nearby_targets_are_reached_exactly(reference3, data3_small, rng):
    """Rotations of the reference endpoint by 1e-4 are reached to 1e-6."""
    for target in random_admissible_targets(reference3, 1e-4, rng, count=2):
        u = solve_local_control(data3_small, target, ref=reference3)
        assert u.meta["endpoint_error"] <= 1e-6
        assert u.meta["iterations"] >= 1
        assert u.t_end == pytest.approx(reference3.T_eta)


@pytest.mark.slow
def test_non_orthonormal_targets_are_incompatible(reference3, data3_small):
    """Scaling the endpoint breaks the Gram matrix."""
    end = reference3.endpoint
    with pytest.raises(CompatibilityError) as exc:
        solve_local_control(data3_small, StateFrame(t=end.t, coeffs=1.01 * end.coeffs), ref=reference3)
    assert exc.value.exit_code == 3


@pytest.mark.slow
def test_zero_eta_reference_has_degenerate_family(data3_small, rng):
    """Without the stage-1 shift the control vanishes: the frame functions are the bare exponentials and the diagonal ones coincide with f_0."""
    ref = build_reference(data3_small, 0.0, variant="N3", M=2048)
    assert np.allclose(wrap_angle(ref.thetas), 0.0, atol=1e-10)
    assert ref.T_eta == pytest.approx(2.0 * PERIOD, abs=1e-9)
    target = project_Xf(ref, _raw_perturbation(ref, rng))
    with pytest.raises(DegenerateFamilyError):
        linear_control_around_ref(ref, data3_small, target)
    assert riesz_gap(ref, data3_small) <= 1e-8


@pytest.mark.slow
def test_reference_bundle_roundtrip(reference3, data3_small, data3, tmp_path):
    """A saved bundle reloads to the same control and endpoint, and only for matching coupling data."""
    paths = save_reference_bundle(reference3, data3_small, str(tmp_path))
    assert set(paths) == {"control", "metadata"}
    back = load_reference_bundle(str(tmp_path), data3_small)
    assert np.array_equal(back.control.values, reference3.control.values)
    assert back.T_eta == reference3.T_eta
    assert back.meta["reload_drift"] <= 1e-12
    with pytest.raises(InputError):
        load_reference_bundle(str(tmp_path), data3)


def test_missing_bundle_is_config_error(data3_small, tmp_path):
    """An empty directory holds no bundle."""
    with pytest.raises(ConfigError):
        load_reference_bundle(str(tmp_path), data3_small)


@pytest.mark.slow
def test_two_particle_in_time_reference(data2):
    """N2_phase aligns the phases at T1 without a delay."""
    ref = build_reference(data2, 1e-2, variant="N2_phase", M=2048)
    assert ref.T_eta == ref.T1
    assert ref.residuals["endpoint"] <= 1e-6
    assert ref.control.zero_tail == 0.0


@pytest.mark.slow
def test_riesz_gap_scales_linearly_in_eta(reference3, reference3_milli, data3_small):
    """gap(eta) / gap(eta / 10) stays near 10 for mu = x^3."""
    sweep = eta_sweep(data3_small, 1e-2, ref=reference3, small=reference3_milli)
    assert sweep["eta"] == [1e-2, pytest.approx(1e-3)]
    assert 8.0 < sweep["ratio"] < 12.0
    assert sweep["linear"]
    assert sweep["gap"][0] > sweep["gap"][1] > 0


@pytest.mark.slow
def test_small_eta_family_remains_a_basis(reference3_milli, data3_small):
    """At eta = 1e-3 the gap sits below the lower frame bound of the exponentials."""
    verdict = family_verdict(reference3_milli, data3_small)
    assert verdict["gap"] == pytest.approx(riesz_gap(reference3_milli, data3_small))
    assert 0 < verdict["gap"] < verdict["lower_bound"]
    assert verdict["verdict"] == "basis"


def test_eta_sweep_needs_positive_eta(data3_small):
    """A zero eta has nothing to scale against."""
    with pytest.raises(InputError):
        eta_sweep(data3_small, 0.0)
