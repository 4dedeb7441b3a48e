from qwell.modules.dynamics.auxiliary import aux_first_order, aux_transform, galerkin_operators, propagate_auxiliary
from qwell.modules.dynamics.export import endpoint_error, export_trajectory_csv, export_trajectory_summary, trajectory_summary
from qwell.modules.dynamics.linearized import free_reference, propagate_linearized, second_order_endpoint, tangent_frame_weights
from qwell.modules.dynamics.phase import PhaseTable, power_phase_integrals, triangle_phase_moments
from qwell.modules.dynamics.propagator import propagate, propagate_with_source
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import StateFrame, Trajectory, free_frame, weighted_h3_norm

__all__ = [
    "ControlSignal",
    "PhaseTable",
    "StateFrame",
    "Trajectory",
    "aux_first_order",
    "aux_transform",
    "endpoint_error",
    "export_trajectory_csv",
    "export_trajectory_summary",
    "free_frame",
    "free_reference",
    "galerkin_operators",
    "power_phase_integrals",
    "propagate",
    "propagate_auxiliary",
    "propagate_linearized",
    "propagate_with_source",
    "second_order_endpoint",
    "tangent_frame_weights",
    "trajectory_summary",
    "triangle_phase_moments",
    "weighted_h3_norm",
]
