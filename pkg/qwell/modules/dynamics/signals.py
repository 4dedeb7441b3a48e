# qwell/modules/dynamics/signals.py
from dataclasses import dataclass, field
from typing import Callable, Dict, Sequence

import numpy as np
from scipy.special import roots_legendre

from qwell.core.exceptions import InputError
from qwell.modules.dynamics.phase import power_phase_integrals

_GRID_TOL = 1e-9


@dataclass
class ControlSignal:
    """
    Real control on a uniform grid starting at t0.

    kind="constant": one value per interval (the amplitude u).
    kind="linear": one value per node, linear in between (the primitive s).
    zero_tail: free-evolution time appended after the last grid node (u = 0 there).
    """
    values: np.ndarray
    dt: float
    t0: float = 0.0
    kind: str = "constant"
    zero_tail: float = 0.0
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.dt = float(self.dt)
        self.t0 = float(self.t0)
        self.zero_tail = float(self.zero_tail)
        if self.kind not in ("constant", "linear"):
            raise InputError(f"Unknown control kind: {self.kind}")
        if not np.all(np.isfinite(self.values)):
            raise InputError("Control has non-finite values")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InputError(f"Control time step must be positive, got {self.dt}")
        if self.zero_tail < 0:
            raise InputError(f"zero_tail must be >= 0, got {self.zero_tail}")
        minimum = 2 if self.kind == "linear" else 1
        if self.values.size < minimum:
            raise InputError(f"A {self.kind} control needs at least {minimum} values")

    # --- constructors ---
    @classmethod
    def zeros(cls, T: float, M: int, t0: float = 0.0) -> "ControlSignal":
        if M < 1:
            raise InputError(f"Interval count must be positive, got {M}")
        return cls(values=np.zeros(M), dt=T / M, t0=t0)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], T: float, M: int,
                      t0: float = 0.0, kind: str = "constant") -> "ControlSignal":
        """Interval averages (4-point Gauss-Legendre) for constant kind, node samples for linear."""
        if M < 1:
            raise InputError(f"Interval count must be positive, got {M}")
        dt = T / M
        nodes = t0 + dt * np.arange(M + 1)
        if kind == "linear":
            return cls(values=np.asarray(fn(nodes), dtype=float), dt=dt, t0=t0, kind="linear")
        x, w = roots_legendre(4)
        pts = nodes[:-1, None] + 0.5 * dt * (x[None, :] + 1.0)
        vals = np.asarray(fn(pts), dtype=float)
        return cls(values=0.5 * vals @ w, dt=dt, t0=t0)

    @classmethod
    def concatenate(cls, parts: Sequence["ControlSignal"]) -> "ControlSignal":
        """Join piecewise-constant pieces that sit back to back on one step size."""
        if not parts:
            raise InputError("Nothing to concatenate")
        first = parts[0]
        for prev, nxt in zip(parts[:-1], parts[1:]):
            if prev.kind != "constant" or nxt.kind != "constant":
                raise InputError("Only piecewise-constant controls can be concatenated")
            if prev.zero_tail > 0:
                raise InputError("Only the last piece may carry a zero tail")
            if abs(prev.dt - nxt.dt) > _GRID_TOL * prev.dt:
                raise InputError(f"Step mismatch: {prev.dt} vs {nxt.dt}")
            if abs(prev.grid_end - nxt.t0) > _GRID_TOL * max(1.0, prev.grid_end):
                raise InputError(f"Pieces are not contiguous: {prev.grid_end} vs {nxt.t0}")
        values = np.concatenate([p.values for p in parts])
        return cls(values=values, dt=first.dt, t0=first.t0, zero_tail=parts[-1].zero_tail)

    # --- grid ---
    @property
    def n_intervals(self) -> int:
        return self.values.size - 1 if self.kind == "linear" else self.values.size

    @property
    def grid_end(self) -> float:
        return self.t0 + self.n_intervals * self.dt

    @property
    def T(self) -> float:
        """Duration including the zero tail."""
        return self.n_intervals * self.dt + self.zero_tail

    @property
    def t_end(self) -> float:
        return self.t0 + self.T

    @property
    def nodes(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_intervals + 1)

    @property
    def interval_starts(self) -> np.ndarray:
        return self.nodes[:-1]

    def interval_coefficients(self):
        """(a_n, b_n) with u(t_n + tau) = a_n + b_n tau on interval n."""
        if self.kind == "constant":
            return self.values.copy(), np.zeros_like(self.values)
        return self.values[:-1].copy(), np.diff(self.values) / self.dt

    def same_grid(self, other: "ControlSignal") -> bool:
        return (
            self.n_intervals == other.n_intervals
            and abs(self.dt - other.dt) <= _GRID_TOL * self.dt
            and abs(self.t0 - other.t0) <= _GRID_TOL * max(1.0, abs(self.t0))
        )

    # --- norms and integrals ---
    def l2_norm(self) -> float:
        if self.kind == "constant":
            return float(np.sqrt(np.sum(self.values ** 2) * self.dt))
        a, b = self.values[:-1], self.values[1:]
        return float(np.sqrt(np.sum(a * a + a * b + b * b) * self.dt / 3.0))

    def integral(self) -> float:
        if self.kind == "constant":
            return float(np.sum(self.values) * self.dt)
        return float(np.sum(self.values[:-1] + self.values[1:]) * self.dt / 2.0)

    def primitive(self) -> "ControlSignal":
        """s(t) = int_{t0}^t u as a piecewise-linear signal, s(t0) = 0."""
        if self.kind != "constant":
            raise InputError("Primitive is defined for piecewise-constant controls")
        if self.zero_tail > 0:
            raise InputError("Primitive of a control with a zero tail is not grid-representable")
        s = np.concatenate([[0.0], np.cumsum(self.values) * self.dt])
        return ControlSignal(values=s, dt=self.dt, t0=self.t0, kind="linear")

    def derivative(self) -> "ControlSignal":
        """Piecewise-constant slope of a linear signal (inverse of primitive)."""
        if self.kind != "linear":
            raise InputError("Derivative is defined for piecewise-linear signals")
        return ControlSignal(values=np.diff(self.values) / self.dt, dt=self.dt, t0=self.t0)

    def value_at(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "linear":
            return np.interp(t, self.nodes, self.values, left=self.values[0], right=self.values[-1])
        idx = np.clip(np.floor((t - self.t0) / self.dt).astype(int), 0, self.n_intervals - 1)
        inside = (t >= self.t0) & (t < self.grid_end)
        return np.where(inside, self.values[idx], 0.0)

    # --- algebra ---
    def scaled(self, alpha: float) -> "ControlSignal":
        return ControlSignal(self.values * float(alpha), self.dt, self.t0, self.kind, self.zero_tail)

    def __add__(self, other: "ControlSignal") -> "ControlSignal":
        if self.kind != other.kind or not self.same_grid(other):
            raise InputError("Controls live on different grids")
        return ControlSignal(self.values + other.values, self.dt, self.t0, self.kind,
                             max(self.zero_tail, other.zero_tail))

    def __sub__(self, other: "ControlSignal") -> "ControlSignal":
        return self + other.scaled(-1.0)

    def with_tail(self, zero_tail: float) -> "ControlSignal":
        return ControlSignal(self.values.copy(), self.dt, self.t0, self.kind, zero_tail, dict(self.meta))

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "t0": self.t0,
            "dt": self.dt,
            "zero_tail": self.zero_tail,
            "n_intervals": self.n_intervals,
            "l2_norm": self.l2_norm(),
        }

    # --- exact moments ---
    def moments(self, omegas: np.ndarray, chunk: int = 256) -> np.ndarray:
        """int v(t) e^{i omega t} dt over the grid, exact per interval (the zero tail adds nothing)."""
        omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
        a, b = self.interval_coefficients()
        starts = self.interval_starts
        flat = omegas.ravel()
        res = np.empty(flat.size, dtype=complex)
        for i0 in range(0, flat.size, chunk):
            w = flat[i0:i0 + chunk]
            I0, I1 = power_phase_integrals(1j * w, self.dt, order=1)
            ph = np.exp(1j * np.outer(w, starts))
            res[i0:i0 + chunk] = (ph @ a) * I0 + (ph @ b) * I1
        return res.reshape(omegas.shape)

    def interval_weights(self, omegas: np.ndarray) -> np.ndarray:
        """W[m, n] = int over interval n of e^{i omega_m t}: moments of a piecewise-constant v are W @ v."""
        omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
        I0 = power_phase_integrals(1j * omegas, self.dt, order=0)[0]
        return np.exp(1j * np.outer(omegas, self.nodes[:-1])) * I0[:, None]
