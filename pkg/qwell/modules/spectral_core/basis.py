# qwell/modules/spectral_core/basis.py
from dataclasses import dataclass

import numpy as np

from qwell.core.config import settings
from qwell.core.exceptions import InputError


def eigenvalues(K: int) -> np.ndarray:
    """lambda_k = (k pi)^2 for k = 1..K."""
    k = np.arange(1, K + 1, dtype=float)
    return (k * np.pi) ** 2


def eigenfunction(k: int, x: np.ndarray) -> np.ndarray:
    """phi_k(x) = sqrt(2) sin(k pi x) on [0, 1]."""
    return np.sqrt(2.0) * np.sin(k * np.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class BasisSpec:
    """Galerkin window: modes 1..K_max of the Dirichlet Laplacian on (0, 1)."""
    K_max: int = settings.QWELL_K_MAX
    quadrature_order: int = 16

    def __post_init__(self):
        if int(self.K_max) < 1:
            raise InputError(f"K_max must be positive, got {self.K_max}")
        if int(self.quadrature_order) < 1:
            raise InputError(f"quadrature_order must be positive, got {self.quadrature_order}")

    @property
    def lambdas(self) -> np.ndarray:
        return eigenvalues(self.K_max)

    def eigenvalue(self, k: int) -> float:
        self.require_mode(k)
        return float((k * np.pi) ** 2)

    def require_mode(self, k: int) -> None:
        if not 1 <= int(k) <= self.K_max:
            raise InputError(f"Mode index {k} outside truncation 1..{self.K_max}")

    def require_particles(self, N: int) -> None:
        if int(self.K_max) < int(N) + 2:
            raise InputError(f"K_max={self.K_max} too small for N={N} particles (need K_max >= N+2)")
