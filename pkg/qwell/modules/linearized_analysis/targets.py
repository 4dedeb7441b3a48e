# qwell/modules/linearized_analysis/targets.py
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from qwell.core.exceptions import InputError, UnreachableDirectionError
from qwell.modules.spectral_core.coupling import CouplingData

Pair = Tuple[int, int]

# Weights of the diagonal phase functional per variant, and its particle count.
VARIANT_WEIGHTS: Dict[str, Tuple[float, ...]] = {
    "N3": (5.0, -8.0, 3.0),
    "N3_phase_delay": (5.0, -8.0, 3.0),
    "N2_phase": (1.0, -1.0),
    "N2_delay": (4.0, -1.0),
}


def variant_weights(variant: str) -> np.ndarray:
    try:
        return np.array(VARIANT_WEIGHTS[variant])
    except KeyError:
        raise InputError(f"Unknown variant: {variant}")


def diag_combo_value(data: CouplingData, variant: str) -> float:
    """sum_j w_j <mu phi_j, phi_j>: the coefficient of int v in the weighted diagonal."""
    w = variant_weights(variant)
    return float(np.dot(w, data.diag[: w.size]))


@dataclass
class LinearTargets:
    """
    Targets <Psi^j(T), Phi_k(T)> for k >= j + 1, the (N, N) entry, and optionally the
    weighted diagonal Im(sum_j w_j <Psi^j(T), Phi_j(T)>) = diag_combo.
    """
    N: int
    entries: Dict[Pair, complex] = field(default_factory=dict)
    diag_combo: Optional[float] = None
    variant: str = "N3"

    def __post_init__(self):
        clean = {}
        for (j, k), value in self.entries.items():
            j, k = int(j), int(k)
            if not 1 <= j <= self.N:
                raise InputError(f"Particle index {j} outside 1..{self.N}")
            if k < j + 1 and (j, k) != (self.N, self.N):
                raise InputError(
                    f"Entry {(j, k)} is induced by the skew structure of the linearization and cannot be set independently"
                )
            if not np.isfinite(value):
                raise InputError(f"Target {(j, k)} is not finite")
            clean[(j, k)] = complex(value)
        self.entries = clean
        if self.diag_combo is not None and (self.N, self.N) in self.entries:
            raise InputError("Give either the (N, N) entry or the weighted diagonal, not both")
        w = variant_weights(self.variant)
        if self.diag_combo is not None and w.size != self.N:
            raise InputError(f"Variant {self.variant} weighs {w.size} particles, targets have {self.N}")

    def pairs(self) -> List[Pair]:
        return sorted(self.entries)

    def scaled(self, alpha: float) -> "LinearTargets":
        return LinearTargets(
            N=self.N,
            entries={p: alpha * v for p, v in self.entries.items()},
            diag_combo=None if self.diag_combo is None else alpha * self.diag_combo,
            variant=self.variant,
        )

    def as_vector(self, pairs: List[Pair]) -> np.ndarray:
        return np.array([self.entries.get(p, 0.0) for p in pairs], dtype=complex)


def canonical_index_set(N: int, K_trunc: int) -> List[Pair]:
    """k >= j + 1 for j <= N, plus (N, N)."""
    pairs = [(j, k) for j in range(1, N + 1) for k in range(j + 1, K_trunc + 1)]
    pairs.append((N, N))
    return pairs


def random_linear_targets(N: int, K_trunc: int, scale: float, rng: np.random.Generator,
                          variant: str = "N3", with_diag: bool = True) -> LinearTargets:
    pairs = [p for p in canonical_index_set(N, K_trunc) if p[0] != p[1]]
    values = scale * (rng.standard_normal(len(pairs)) + 1j * rng.standard_normal(len(pairs))) / np.sqrt(2.0)
    entries = dict(zip(pairs, values))
    if with_diag:
        return LinearTargets(N=N, entries=entries, diag_combo=float(scale * rng.standard_normal()), variant=variant)
    return LinearTargets(N=N, entries=entries, variant=variant)


def require_coupling(value: float, pair: Pair, tol: float = 1e-14) -> None:
    if abs(value) <= tol:
        raise UnreachableDirectionError(f"<mu phi_{pair[0]}, phi_{pair[1]}> vanishes; direction {pair} is unreachable at first order")


def default_variant(N: int) -> str:
    return "N3" if N == 3 else "N2_phase"
