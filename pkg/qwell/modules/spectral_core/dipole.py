# qwell/modules/spectral_core/dipole.py
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import make_interp_spline

from qwell.core.exceptions import InputError


@dataclass(frozen=True)
class DipoleMoment:
    """
    Real coupling profile mu on [0, 1].

    kind="poly": ascending coefficients, every derivative exact.
    kind="samples": interpolating spline of degree >= 3 through (x, y); x must span [0, 1].
    """
    kind: str
    coeffs: Tuple[float, ...] = ()
    x: Tuple[float, ...] = ()
    y: Tuple[float, ...] = ()
    spline_degree: int = 3

    def __post_init__(self):
        if self.kind == "poly":
            c = np.asarray(self.coeffs, dtype=float)
            if c.size == 0:
                object.__setattr__(self, "coeffs", (0.0,))
            elif not np.all(np.isfinite(c)):
                raise InputError("Polynomial dipole has non-finite coefficients")
        elif self.kind == "samples":
            x = np.asarray(self.x, dtype=float)
            y = np.asarray(self.y, dtype=float)
            if x.shape != y.shape or x.ndim != 1:
                raise InputError("Sampled dipole needs 1-D x and y of equal length")
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
                raise InputError("Sampled dipole has non-finite samples")
            if self.spline_degree < 3:
                raise InputError(f"Spline degree must be >= 3, got {self.spline_degree}")
            if x.size < self.spline_degree + 1:
                raise InputError(f"Need at least {self.spline_degree + 1} samples for degree {self.spline_degree}")
            if np.any(np.diff(x) <= 0):
                raise InputError("Sample abscissae must be strictly increasing")
            if x[0] > 1e-12 or x[-1] < 1.0 - 1e-12:
                raise InputError("Sample abscissae must cover [0, 1]")
        else:
            raise InputError(f"Unknown dipole kind: {self.kind}")

    # --- constructors ---
    @classmethod
    def polynomial(cls, coeffs) -> "DipoleMoment":
        return cls(kind="poly", coeffs=tuple(float(c) for c in coeffs))

    @classmethod
    def from_samples(cls, x, y, spline_degree: int = 3) -> "DipoleMoment":
        return cls(kind="samples", x=tuple(float(v) for v in x), y=tuple(float(v) for v in y), spline_degree=spline_degree)

    @classmethod
    def cubic(cls) -> "DipoleMoment":
        """mu(x) = x^3, the default profile."""
        return cls.polynomial([0.0, 0.0, 0.0, 1.0])

    @classmethod
    def from_spec(cls, spec: Dict[str, Any]) -> "DipoleMoment":
        """{"type": "poly", "coeffs": [...]} or {"type": "samples", "x": [...], "y": [...]}."""
        kind = spec.get("type")
        if kind == "poly":
            return cls.polynomial(spec.get("coeffs", []))
        if kind == "samples":
            return cls.from_samples(spec.get("x", []), spec.get("y", []), int(spec.get("spline_degree", 3)))
        raise InputError(f"Unknown dipole type: {kind}")

    def to_spec(self) -> Dict[str, Any]:
        if self.is_polynomial:
            return {"type": "poly", "coeffs": list(self.coeffs)}
        return {"type": "samples", "x": list(self.x), "y": list(self.y), "spline_degree": self.spline_degree}

    # --- representation ---
    @property
    def is_polynomial(self) -> bool:
        return self.kind == "poly"

    @cached_property
    def poly(self) -> Polynomial:
        if not self.is_polynomial:
            raise InputError("Dipole is not polynomial")
        return Polynomial(np.asarray(self.coeffs, dtype=float))

    @cached_property
    def _spline(self):
        return make_interp_spline(np.asarray(self.x), np.asarray(self.y), k=self.spline_degree)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_polynomial:
            return self.poly(x)
        return self._spline(x)

    def derivative(self, m: int = 1) -> Callable[[np.ndarray], np.ndarray]:
        """Callable for the m-th derivative; sampled profiles support m <= spline degree."""
        if self.is_polynomial:
            return self.poly.deriv(m)
        if m > self.spline_degree:
            raise InputError(f"Derivative of order {m} unavailable for a degree-{self.spline_degree} spline")
        return self._spline.derivative(m)

    def squared_gradient(self) -> "Profile":
        """(mu')^2 as an integrable profile."""
        if self.is_polynomial:
            d = self.poly.deriv(1)
            return Profile(poly=d * d)
        d = self.derivative(1)
        return Profile(func=lambda x: d(x) ** 2)

    def as_profile(self) -> "Profile":
        if self.is_polynomial:
            return Profile(poly=self.poly)
        return Profile(func=self._spline)

    # --- linear structure (exact for polynomials, resampled on the union grid otherwise) ---
    def scaled(self, alpha: float) -> "DipoleMoment":
        if self.is_polynomial:
            return DipoleMoment.polynomial([alpha * c for c in self.coeffs])
        return DipoleMoment.from_samples(self.x, [alpha * v for v in self.y], self.spline_degree)

    def __neg__(self) -> "DipoleMoment":
        return self.scaled(-1.0)

    def __add__(self, other: "DipoleMoment") -> "DipoleMoment":
        if self.is_polynomial and other.is_polynomial:
            return DipoleMoment.polynomial((self.poly + other.poly).coef)
        x = np.union1d(self._grid(), other._grid())
        return DipoleMoment.from_samples(x, self(x) + other(x), max(self.spline_degree, other.spline_degree))

    def _grid(self) -> np.ndarray:
        if self.is_polynomial:
            return np.linspace(0.0, 1.0, 257)
        return np.asarray(self.x)


@dataclass(frozen=True)
class Profile:
    """A real function on [0, 1] given either exactly (polynomial) or as a callable."""
    poly: Optional[Polynomial] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x):
        if self.poly is not None:
            return self.poly(np.asarray(x, dtype=float))
        return self.func(np.asarray(x, dtype=float))
