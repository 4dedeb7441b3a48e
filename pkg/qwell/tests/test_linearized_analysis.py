# qwell/tests/test_linearized_analysis.py
"""First-order endpoint around the eigenstates: synthesis, measurement and the built-in obstruction identities."""
import numpy as np
import pytest

from qwell.core.exceptions import InputError, UnreachableDirectionError
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.linearized_analysis import (
    LinearTargets,
    canonical_index_set,
    check_obstruction_identity,
    diag_combo_value,
    first_order_endpoint,
    measure_linear_targets,
    random_linear_targets,
    synth_linear_control,
)


@pytest.mark.parametrize("N, variant", [(2, "N2_phase"), (2, "N2_delay"), (3, "N3")])
def test_synthesized_control_reaches_targets(data2, data3, rng, N, variant):
    """measure(synthesize(targets)) gives the targets back."""
    data = data2 if N == 2 else data3
    targets = random_linear_targets(N, 6, 0.1, rng, variant=variant)
    v = synth_linear_control(targets, data, T=1.0, K_trunc=6, M=2048)
    measured = measure_linear_targets(v, data, T=1.0, index_set=canonical_index_set(N, 6), variant=variant)
    for pair, value in targets.entries.items():
        assert measured.entries[pair] == pytest.approx(value, abs=1e-8)
    assert measured.diag_combo == pytest.approx(targets.diag_combo, abs=1e-8)


def test_nn_entry_moves_along_imaginary_axis(data2):
    """Without a weighted diagonal the (N, N) entry is set directly."""
    targets = LinearTargets(N=2, entries={(1, 2): 0.01 + 0.02j, (2, 2): 0.03j}, variant="N2_phase")
    v = synth_linear_control(targets, data2, T=1.0, K_trunc=5, M=2048)
    measured = measure_linear_targets(v, data2, T=1.0, index_set=canonical_index_set(2, 5), with_diag=False)
    assert measured.entries[(2, 2)] == pytest.approx(0.03j, abs=1e-9)
    assert measured.entries[(1, 2)] == pytest.approx(0.01 + 0.02j, abs=1e-9)
    assert measured.entries[(1, 5)] == pytest.approx(0.0, abs=1e-9)


def test_real_nn_entry_is_rejected(data2):
    """Re <Psi^N, Phi_N> is pinned to zero by norm conservation."""
    targets = LinearTargets(N=2, entries={(2, 2): 0.03 + 0.01j})
    with pytest.raises(InputError):
        synth_linear_control(targets, data2, T=1.0, K_trunc=4, M=1024)


def test_obstruction_identities_hold_for_any_control(data2, rng):
    """d_2 <Psi^1, Phi_1> = d_1 <Psi^2, Phi_2> and <Psi^1, Phi_2> = -conj <Psi^2, Phi_1>."""
    v = ControlSignal(rng.standard_normal(512), 0.6 / 512)
    r1, r2 = check_obstruction_identity(v, data2, T=0.6)
    assert r1 < 1e-13
    assert r2 < 1e-13


def test_endpoint_is_linear_in_the_control(data2, rng):
    """E(a v + w) = a E(v) + E(w)."""
    v = ControlSignal(rng.standard_normal(256), 1.0 / 256)
    w = ControlSignal(rng.standard_normal(256), 1.0 / 256)
    lhs = first_order_endpoint(v.scaled(2.0) + w, data2)
    rhs = 2.0 * first_order_endpoint(v, data2) + first_order_endpoint(w, data2)
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_endpoint_horizon_must_match(data2):
    """Asking for the endpoint at another time is an input error."""
    with pytest.raises(InputError):
        first_order_endpoint(ControlSignal.zeros(1.0, 16), data2, T=0.5)


def test_skew_induced_entries_cannot_be_targeted():
    """(k, j) with k > j follows from (j, k) and is rejected."""
    with pytest.raises(InputError):
        LinearTargets(N=2, entries={(2, 1): 0.1})


def test_nn_entry_and_weighted_diagonal_are_exclusive():
    """Only one of the two ways of fixing int v may be given."""
    with pytest.raises(InputError):
        LinearTargets(N=2, entries={(2, 2): 0.1j}, diag_combo=0.2, variant="N2_phase")


def test_variant_must_match_particle_count():
    """The N3 weights need three particles."""
    with pytest.raises(InputError):
        LinearTargets(N=2, diag_combo=0.1, variant="N3")


def test_vanishing_coupling_is_unreachable(linear_data, rng):
    """mu = x has <x phi_1, phi_3> = 0: that direction cannot be reached at first order."""
    targets = random_linear_targets(2, 4, 0.1, rng, variant="N2_delay")
    with pytest.raises(UnreachableDirectionError) as exc:
        synth_linear_control(targets, linear_data, T=1.0, K_trunc=4, M=1024)
    assert exc.value.exit_code == 3


def test_diag_combo_values_for_cubic(data3):
    """5 d_1 - 8 d_2 + 3 d_3 and d_1 - d_2 for mu = x^3."""
    assert diag_combo_value(data3, "N3") == pytest.approx(data3.combo_531)
    assert diag_combo_value(data3, "N2_phase") == pytest.approx(data3.diag_gap)
    assert diag_combo_value(data3, "N2_delay") == pytest.approx(data3.combo_41)
