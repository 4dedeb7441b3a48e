# qwell/core/schemas.py
"""
Strict Pydantic schemas for command run configs.
Used by the kernel to validate packet.params before dispatch.
"""
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from qwell.core.config import settings


# --- dipole moment ---
class PolyDipoleSpec(BaseModel):
    type: Literal["poly"] = "poly"
    coeffs: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0, 1.0], description="Ascending coefficients")


class SampledDipoleSpec(BaseModel):
    type: Literal["samples"]
    x: List[float] = Field(..., min_length=4)
    y: List[float] = Field(..., min_length=4)
    spline_degree: int = Field(default=3, ge=3)

    @model_validator(mode="after")
    def _same_length(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same length")
        return self


DipoleSpec = Annotated[Union[PolyDipoleSpec, SampledDipoleSpec], Field(discriminator="type")]


class BaseRunParams(BaseModel):
    """Fields every command accepts."""
    dipole: DipoleSpec = Field(default_factory=PolyDipoleSpec)
    N: int = Field(default=2, ge=1, le=3)
    K_max: int = Field(default_factory=lambda: settings.QWELL_K_MAX, ge=3, le=4096)
    quadrature_order: int = Field(default=16, ge=1)
    seed: int = Field(default_factory=lambda: settings.QWELL_DEFAULT_SEED, ge=0)
    threads: int = Field(default_factory=lambda: settings.QWELL_THREADS, ge=1)
    out: Optional[str] = None

    model_config = ConfigDict(extra="forbid")


# --- check-hypotheses ---
class CheckHypothesesParams(BaseRunParams):
    threshold: float = Field(default=1e-8, gt=0)


# --- simulate ---
class ZeroControlSpec(BaseModel):
    type: Literal["zero"] = "zero"


class SampledControlSpec(BaseModel):
    type: Literal["samples"]
    values: List[float] = Field(..., min_length=1)


class Tone(BaseModel):
    amplitude: float
    omega: float
    phase: float = 0.0


class TonesControlSpec(BaseModel):
    """u(t) = sum_n a_n cos(omega_n t + phase_n)."""
    type: Literal["tones"]
    tones: List[Tone] = Field(..., min_length=1)


ControlSpec = Annotated[Union[ZeroControlSpec, SampledControlSpec, TonesControlSpec], Field(discriminator="type")]


class SimulateParams(BaseRunParams):
    T: float = Field(default=1.0, gt=0)
    M: int = Field(default_factory=lambda: settings.QWELL_GRID_INTERVALS, ge=1)
    control: ControlSpec = Field(default_factory=ZeroControlSpec)
    stride: int = Field(default=16, ge=1, description="Export every stride-th grid node")
    export_modes: Optional[int] = Field(default=None, ge=1)
    random_controls: int = Field(default=0, ge=0, description="Extra random controls for the invariant check")
    random_budget: float = Field(default=1.0, gt=0, description="L2 norm of each random control")
    random_modes: int = Field(default=16, ge=1)

    @model_validator(mode="after")
    def _samples_match_grid(self):
        if isinstance(self.control, SampledControlSpec) and len(self.control.values) != self.M:
            raise ValueError(f"control.values has {len(self.control.values)} entries, M is {self.M}")
        return self


# --- obstruction ---
class ReachabilityParams(BaseModel):
    T: float = Field(default=0.1, gt=0)
    trials: int = Field(default=200, ge=1)
    budget: float = Field(default=0.1, gt=0)
    modes: int = Field(default=16, ge=1)
    M: int = Field(default=2048, ge=16)
    K_window: Optional[int] = Field(default=None, ge=2)


class ExpansionParams(BaseModel):
    j: int = Field(default=1, ge=1, le=3)
    T: float = Field(default=0.1, gt=0)
    eps: List[float] = Field(default_factory=lambda: [1e-1, 3e-2, 1e-2, 3e-3, 1e-3], min_length=2)
    M: int = Field(default=2048, ge=16)

    @field_validator("eps")
    @classmethod
    def _positive(cls, v):
        if any(e <= 0 for e in v):
            raise ValueError("every eps must be positive")
        return v


class ObstructionParams(BaseRunParams):
    variant: Literal["N2", "N3"] = "N2"
    T_grid: Optional[List[float]] = Field(default=None, min_length=1)
    T_max: float = Field(default=0.2, gt=0)
    T_count: int = Field(default=20, ge=1)
    resolution: int = Field(default_factory=lambda: settings.QWELL_SCAN_RESOLUTION, ge=4)
    K_trunc: int = Field(default_factory=lambda: settings.QWELL_KERNEL_TRUNCATION, ge=2)
    reachability: Optional[ReachabilityParams] = None
    expansion: Optional[ExpansionParams] = None

    @field_validator("T_grid")
    @classmethod
    def _positive_horizons(cls, v):
        if v is not None and any(T <= 0 for T in v):
            raise ValueError("every horizon in T_grid must be positive")
        return v


# --- build-reference / control ---
ReferenceVariant = Literal["N3", "N3_phase_delay", "N2_phase", "N2_delay"]


class ReferenceParams(BaseRunParams):
    variant: ReferenceVariant = "N3_phase_delay"
    eta: float = Field(default=1e-2, ge=0)
    eps: float = Field(default=0.3, gt=0)
    eps1: Optional[float] = Field(default=0.2, gt=0)
    T1: float = Field(default=1.0, gt=0)
    K_pump: int = Field(default=4, ge=2)
    M: int = Field(default_factory=lambda: settings.QWELL_GRID_INTERVALS, ge=16)
    eta_max: float = Field(default=0.1, gt=0)

    @model_validator(mode="after")
    def _stage_times(self):
        if not self.eps < self.T1:
            raise ValueError(f"eps={self.eps} must be smaller than T1={self.T1}")
        return self


class BuildReferenceParams(ReferenceParams):
    check_scaling: bool = Field(default=False, description="Also build at eta / 10 and report the Riesz gap ratio")


class ReferenceTargetSpec(BaseModel):
    """The reference endpoint itself."""
    type: Literal["reference"] = "reference"


class RandomTargetSpec(BaseModel):
    """Reference endpoint rotated by exp(i radius H) for random Hermitian H."""
    type: Literal["random"]
    radius: float = Field(default=1e-4, gt=0)
    count: int = Field(default=1, ge=1)


class ExplicitTargetSpec(BaseModel):
    """coeffs[j][k] = [re, im] of <psi_f^j, phi_k> at the final time."""
    type: Literal["explicit"]
    coeffs: List[List[List[float]]]


TargetSpec = Annotated[Union[ReferenceTargetSpec, RandomTargetSpec, ExplicitTargetSpec], Field(discriminator="type")]


class RadiusSearchParams(BaseModel):
    r_lo: float = Field(default=1e-5, gt=0)
    r_hi: float = Field(default=1e-1, gt=0)
    directions: int = Field(default=3, ge=1)
    bisections: int = Field(default=6, ge=0)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.r_lo < self.r_hi:
            raise ValueError("r_lo must be smaller than r_hi")
        return self


class ControlParams(ReferenceParams):
    reference_bundle: Optional[str] = Field(default=None, description="Directory written by build-reference")
    targets: TargetSpec = Field(default_factory=ReferenceTargetSpec)
    extra_time: float = Field(default=0.0, ge=0)
    tol: float = Field(default=1e-10, gt=0)
    max_iter: Optional[int] = Field(default=None, ge=1)
    radius_max: float = Field(default=1.0, gt=0)
    radius_search: Optional[RadiusSearchParams] = None


# --- TASK_SCHEMA_MAP: command key -> schema class (None = no validation) ---
TASK_SCHEMA_MAP = {
    "check_hypotheses": CheckHypothesesParams,
    "simulate": SimulateParams,
    "obstruction": ObstructionParams,
    "build_reference": BuildReferenceParams,
    "control": ControlParams,
}
