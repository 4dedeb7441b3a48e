# qwell/modules/obstruction/coercivity.py
import logging
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.linalg import LinAlgError, eigh, toeplitz

from qwell.core.config import settings
from qwell.core.exceptions import EigenSolveError
from qwell.core.workers import map_sync
from qwell.modules.dynamics.phase import power_phase_integrals, triangle_phase_moments
from qwell.modules.obstruction.forms import _mode_window, combination_weights, grad_diag_entry, obstruction_scalar
from qwell.modules.spectral_core.coupling import CouplingData

logger = logging.getLogger("Qwell.Coercivity")

_DEGENERATE_TOL = 1e-12


class CoercivityReport(BaseModel):
    variant: str
    scalar: float = Field(..., description="A for N2, B for N3")
    T_grid: List[float]
    rayleigh_max: List[float]
    T_star_est: Optional[float] = Field(None, description="Largest scanned T with rayleigh_max < 0")
    T_star_bracket: List[Optional[float]] = Field(default_factory=list, description="Last T of the leading negative run, first T after it")
    samples_tested: int = 0
    resolution: int
    K_trunc: int
    degenerate: bool = False
    applicable: bool = True
    label: str = "empirical bracket"

    def rows(self):
        return [[T, r] for T, r in zip(self.T_grid, self.rayleigh_max)]


def form_matrix(data: CouplingData, T: float, resolution: int, variant: str, K_trunc: int) -> np.ndarray:
    """
    Symmetric matrix A with s^T A s equal to the combined form for piecewise-constant s on
    `resolution` intervals. Cross-interval entries depend only on the lag, so A is Toeplitz.
    """
    dt = T / resolution
    lags = np.arange(resolution) * dt
    col = np.zeros(resolution)
    diag_coef = 0.0
    for j, c in combination_weights(data, variant).items():
        if c == 0.0:
            continue
        omegas, row = _mode_window(data, j, K_trunc)
        weights = c * omegas ** 2 * row ** 2
        E0 = power_phase_integrals(1j * omegas, dt, order=0)[0]
        same = np.imag(triangle_phase_moments(1j * omegas, dt)[0])
        col[0] += float(np.dot(weights, same))
        col[1:] += 0.5 * (np.sin(np.outer(lags[1:], omegas)) @ (weights * np.abs(E0) ** 2))
        diag_coef -= c * grad_diag_entry(data, j)
    col[0] += diag_coef * dt
    return toeplitz(col)


def rayleigh_max_at(data: CouplingData, T: float, resolution: Optional[int] = None, variant: str = "N2",
                    K_trunc: Optional[int] = None) -> float:
    """max over piecewise-constant s of sign(scalar) Q_T(s) / ||s||^2."""
    resolution = settings.QWELL_SCAN_RESOLUTION if resolution is None else int(resolution)
    K_trunc = settings.QWELL_KERNEL_TRUNCATION if K_trunc is None else int(K_trunc)
    scalar = obstruction_scalar(data, variant)
    sign = 1.0 if scalar >= 0 else -1.0
    A = form_matrix(data, T, resolution, variant, K_trunc)
    try:
        top = eigh(sign * A, eigvals_only=True, subset_by_index=[resolution - 1, resolution - 1])[0]
    except LinAlgError as e:
        raise EigenSolveError(f"Coercivity eigen-solve failed at T={T}: {e}")
    return float(top / (T / resolution))


def coercivity_report(data: CouplingData, T_grid: Sequence[float], values: Sequence[float], resolution: int,
                      variant: str, K_trunc: int) -> CoercivityReport:
    scalar = obstruction_scalar(data, variant)
    T_grid = [float(T) for T in T_grid]
    values = [float(v) for v in values]
    negative = [T for T, r in zip(T_grid, values) if r < 0]
    bracket: List[Optional[float]] = [None, None]
    for T, r in zip(T_grid, values):
        if r < 0:
            bracket[0] = T
        else:
            bracket[1] = T
            break
    return CoercivityReport(
        variant=variant,
        scalar=scalar,
        T_grid=T_grid,
        rayleigh_max=values,
        T_star_est=max(negative) if negative else None,
        T_star_bracket=bracket,
        samples_tested=len(T_grid) * resolution,
        resolution=resolution,
        K_trunc=K_trunc,
    )


def coercivity_scan(data: CouplingData, T_grid: Sequence[float], resolution: Optional[int] = None,
                    variant: str = "N2", K_trunc: Optional[int] = None, threads: int = 1) -> CoercivityReport:
    """Largest Rayleigh quotient of sign(scalar) Q_T per horizon; not applicable when the scalar vanishes."""
    resolution = settings.QWELL_SCAN_RESOLUTION if resolution is None else int(resolution)
    K_trunc = settings.QWELL_KERNEL_TRUNCATION if K_trunc is None else int(K_trunc)
    T_grid = sorted(float(T) for T in T_grid)
    scalar = obstruction_scalar(data, variant)
    if abs(scalar) <= _DEGENERATE_TOL:
        logger.warning(f"⚠️ Obstruction scalar for {variant} vanishes; coercivity scan not applicable")
        return CoercivityReport(
            variant=variant,
            scalar=scalar,
            T_grid=T_grid,
            rayleigh_max=[0.0] * len(T_grid),
            resolution=resolution,
            K_trunc=K_trunc,
            degenerate=True,
            applicable=False,
        )
    values = map_sync(lambda T: rayleigh_max_at(data, T, resolution, variant, K_trunc), T_grid, threads)
    report = coercivity_report(data, T_grid, values, resolution, variant, K_trunc)
    logger.info(f"🔍 Coercivity scan {variant}: T_star_est={report.T_star_est} over {len(T_grid)} horizons")
    return report
