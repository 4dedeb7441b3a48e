# qwell/modules/linearized_analysis/synthesis.py
import logging
from typing import Optional

import numpy as np

from qwell.core.exceptions import InputError, UnreachableDirectionError
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import StateFrame
from qwell.modules.linearized_analysis.targets import (
    LinearTargets,
    canonical_index_set,
    diag_combo_value,
    require_coupling,
    variant_weights,
)
from qwell.modules.moment_solver.frequencies import build_frequency_set, targets_from_pairs
from qwell.modules.moment_solver.solver import solve_moments
from qwell.modules.spectral_core.coupling import CouplingData

logger = logging.getLogger("Qwell.Linearized")


def synth_linear_control(
    targets: LinearTargets,
    data: CouplingData,
    T: float,
    initial: Optional[StateFrame] = None,
    t0: float = 0.0,
    K_trunc: Optional[int] = None,
    M: Optional[int] = None,
    ridge: float = 0.0,
) -> ControlSignal:
    """
    Minimal-norm v on (t0, T) whose first-order effect around the eigenstates, added to the
    free evolution of `initial`, reaches the targets:
      int v e^{i (lambda_k - lambda_j) t} = (target_jk - <Psi^j_0, Phi_k(t0)>) / (i <mu phi_j, phi_k>)
    on every pair k >= j + 1 up to K_trunc (missing entries target 0), plus one real equation for
    int v fixed by the weighted diagonal or the (N, N) entry.
    """
    N = targets.N
    K = data.K_max if K_trunc is None else int(K_trunc)
    if N > data.N:
        raise InputError(f"Targets for {N} particles, coupling data built for {data.N}")
    b0 = np.zeros((N, K), dtype=complex)
    if initial is not None:
        if abs(initial.t - t0) > 1e-9 * max(1.0, abs(t0)):
            raise InputError(f"Initial state at t={initial.t}, synthesis starts at {t0}")
        b0 = initial.moving_coefficients()[:N, :K]

    index_set = canonical_index_set(N, K)
    values = {}
    for (j, k) in index_set:
        if j == k:
            continue
        coupling = data.coupling_row(j, K)[k - 1]
        target = targets.entries.get((j, k), 0.0)
        require_coupling(coupling, (j, k))
        values[(j, k)] = (target - b0[j - 1, k - 1]) / (1j * coupling)

    d = data.diag
    if targets.diag_combo is not None:
        combo = diag_combo_value(data, targets.variant)
        if abs(combo) <= 1e-14:
            raise UnreachableDirectionError(f"Weighted diagonal combination vanishes for variant {targets.variant}")
        w = variant_weights(targets.variant)
        current = float(np.imag(np.dot(w, np.diag(b0)[: w.size])))
        values[(N, N)] = (targets.diag_combo - current) / combo
    elif (N, N) in targets.entries:
        require_coupling(d[N - 1], (N, N))
        delta = targets.entries[(N, N)] - b0[N - 1, N - 1]
        if abs(delta.real) > 1e-12 * max(1.0, abs(delta)):
            raise InputError("The (N, N) entry can only move along i <mu phi_N, phi_N>")
        values[(N, N)] = delta.imag / d[N - 1]
    else:
        values[(N, N)] = 0.0

    freqs = build_frequency_set(N, K, T - t0, index_set)
    moments = targets_from_pairs(freqs, values)
    v = solve_moments(freqs, moments, M=M, ridge=ridge, t0=t0)
    logger.debug(f"Synthesized linear control on ({t0:.4g}, {T:.4g}) for {len(values)} equations, |v|={v.l2_norm():.3e}")
    return v
