# qwell/modules/linearized_analysis/endpoint.py
import logging
from typing import List, Optional, Tuple

import numpy as np

from qwell.core.exceptions import InputError
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.linearized_analysis.targets import LinearTargets, Pair, canonical_index_set, default_variant, variant_weights
from qwell.modules.spectral_core.basis import eigenvalues
from qwell.modules.spectral_core.coupling import CouplingData

logger = logging.getLogger("Qwell.Linearized")


def first_order_endpoint(v: ControlSignal, data: CouplingData, T: Optional[float] = None,
                         N: Optional[int] = None, K_trunc: Optional[int] = None) -> np.ndarray:
    """<Psi^j(T), Phi_k(T)> = i <mu phi_j, phi_k> int v e^{i (lambda_k - lambda_j) t} dt."""
    N = data.N if N is None else N
    K = data.K_max if K_trunc is None else K_trunc
    if T is not None and abs(v.t_end - T) > 1e-9 * max(1.0, T):
        raise InputError(f"Control ends at {v.t_end}, endpoint requested at {T}")
    lam = eigenvalues(K)
    omega = lam[None, :] - lam[:N, None]
    rows = np.stack([data.coupling_row(j, K) for j in range(1, N + 1)])
    return 1j * rows * v.moments(omega)


def check_obstruction_identity(v: ControlSignal, data: CouplingData, T: Optional[float] = None,
                               endpoint: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """
    Residuals of the two first-order identities around (Phi_1, Phi_2):
    d_2 <Psi^1, Phi_1> = d_1 <Psi^2, Phi_2> and <Psi^1, Phi_2> + conj(<Psi^2, Phi_1>) = 0.
    """
    if data.N < 2:
        raise InputError("The obstruction identities need at least two particles")
    E = first_order_endpoint(v, data, T, N=2) if endpoint is None else np.asarray(endpoint)
    d = data.diag
    r1 = abs(d[1] * E[0, 0] - d[0] * E[1, 1])
    r2 = abs(E[0, 1] + np.conj(E[1, 0]))
    return float(r1), float(r2)


def measure_linear_targets(v: ControlSignal, data: CouplingData, T: Optional[float] = None,
                           index_set: Optional[List[Pair]] = None, variant: Optional[str] = None,
                           endpoint: Optional[np.ndarray] = None, with_diag: bool = True) -> LinearTargets:
    """Reads LinearTargets off an endpoint matrix (the closed form unless one is given)."""
    N = data.N
    variant = default_variant(N) if variant is None else variant
    if index_set is None:
        index_set = canonical_index_set(N, data.K_max)
    K = max(k for _, k in index_set)
    E = first_order_endpoint(v, data, T, N=N, K_trunc=K) if endpoint is None else np.asarray(endpoint)
    entries = {p: complex(E[p[0] - 1, p[1] - 1]) for p in index_set if p[0] != p[1]}
    if with_diag:
        w = variant_weights(variant)
        combo = float(np.imag(np.dot(w, np.diag(E)[: w.size])))
        return LinearTargets(N=N, entries=entries, diag_combo=combo, variant=variant)
    for p in index_set:
        if p[0] == p[1]:
            entries[p] = complex(E[p[0] - 1, p[1] - 1])
    return LinearTargets(N=N, entries=entries, variant=variant)
