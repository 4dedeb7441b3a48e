# qwell/modules/dynamics/states.py
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from qwell.core.exceptions import InputError
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.spectral_core.basis import eigenvalues


def moving_phases(K: int, t: float) -> np.ndarray:
    """e^{i lambda_k t}: multiplying Schrodinger coefficients by this gives <psi, Phi_k(t)>."""
    return np.exp(1j * eigenvalues(K) * t)


@dataclass
class StateFrame:
    """N wave functions at time t; row j holds <psi^j, phi_k> for k = 1..K."""
    t: float
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        if not np.all(np.isfinite(self.coeffs)):
            raise InputError("State has non-finite coefficients")

    @classmethod
    def from_moving(cls, b: np.ndarray, t: float) -> "StateFrame":
        b = np.atleast_2d(np.asarray(b, dtype=complex))
        return cls(t=t, coeffs=b * np.conj(moving_phases(b.shape[1], t))[None, :])

    @classmethod
    def zeros(cls, N: int, K: int, t: float = 0.0) -> "StateFrame":
        return cls(t=t, coeffs=np.zeros((N, K), dtype=complex))

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    @property
    def K(self) -> int:
        return self.coeffs.shape[1]

    def moving_coefficients(self) -> np.ndarray:
        """<psi^j, Phi_k(t)> = c_jk e^{i lambda_k t}."""
        return self.coeffs * moving_phases(self.K, self.t)[None, :]

    def gram(self) -> np.ndarray:
        """<psi^j, psi^k> with the inner product linear in the first slot."""
        return self.coeffs @ self.coeffs.conj().T

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.coeffs, axis=1)

    def tail_mass(self) -> float:
        return float(np.max(np.abs(self.coeffs[:, -1])))

    def h3_norms(self) -> np.ndarray:
        return np.array([weighted_h3_norm(row) for row in self.coeffs])

    def copy(self) -> "StateFrame":
        return StateFrame(t=self.t, coeffs=self.coeffs.copy())


def free_frame(N: int, K: int, t: float = 0.0) -> StateFrame:
    """(Phi_1(t), ..., Phi_N(t)) with Phi_k(t) = phi_k e^{-i lambda_k t}."""
    if N > K:
        raise InputError(f"Cannot place {N} eigenstates in {K} modes")
    coeffs = np.zeros((N, K), dtype=complex)
    lam = eigenvalues(K)
    idx = np.arange(N)
    coeffs[idx, idx] = np.exp(-1j * lam[:N] * t)
    return StateFrame(t=t, coeffs=coeffs)


def weighted_h3_norm(row: np.ndarray) -> float:
    """(sum_k |k^3 a_k|^2)^{1/2}."""
    row = np.asarray(row)
    k = np.arange(1, row.size + 1, dtype=float)
    return float(np.sqrt(np.sum(np.abs(k ** 3 * row) ** 2)))


@dataclass
class Trajectory:
    """Time-ordered frames of one propagation; coeffs has shape (F, N, K)."""
    times: np.ndarray
    coeffs: np.ndarray
    control: Optional[ControlSignal] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or self.times.size != self.coeffs.shape[0]:
            raise InputError("Trajectory times and frames disagree")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise InputError("Trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    def frame(self, i: int) -> StateFrame:
        return StateFrame(t=float(self.times[i]), coeffs=self.coeffs[i])

    @property
    def frames(self) -> List[StateFrame]:
        return [self.frame(i) for i in range(len(self))]

    @property
    def final(self) -> StateFrame:
        return self.frame(-1)

    @property
    def initial(self) -> StateFrame:
        return self.frame(0)

    def moving_coefficients(self) -> np.ndarray:
        """<psi^j(t_i), Phi_k(t_i)> for every stored frame."""
        K = self.coeffs.shape[2]
        ph = np.exp(1j * np.outer(self.times, eigenvalues(K)))
        return self.coeffs * ph[:, None, :]

    def gram_drift(self) -> float:
        G0 = self.initial.gram()
        grams = np.einsum("fjk,flk->fjl", self.coeffs, self.coeffs.conj())
        return float(np.max(np.abs(grams - G0[None])))

    def norm_drift(self) -> float:
        norms = np.linalg.norm(self.coeffs, axis=2)
        return float(np.max(np.abs(norms - norms[0][None, :])))

    def tail_mass(self) -> float:
        return float(np.max(np.abs(self.coeffs[:, :, -1])))

    def summary(self) -> Dict[str, Any]:
        return {
            "T": float(self.times[-1] - self.times[0]),
            "frames": len(self),
            "gram_drift": self.gram_drift(),
            "norm_drift": self.norm_drift(),
            "tail_mass": self.tail_mass(),
            "final_norms": self.final.norms().tolist(),
            "meta": dict(self.meta),
        }
