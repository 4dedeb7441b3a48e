from qwell.modules.return_method.bundle import load_reference_bundle, save_reference_bundle
from qwell.modules.return_method.local_control import (
    FrameFunctions,
    RadiusReport,
    XfTarget,
    estimate_target_radius,
    eta_sweep,
    family_verdict,
    linear_control_around_ref,
    project_Xf,
    random_admissible_targets,
    reference_frame_functions,
    riesz_gap,
    rotated_targets,
    solve_local_control,
)
from qwell.modules.return_method.reference import (
    REFERENCE_VARIANTS,
    ReferenceTrajectory,
    build_reference,
    extend_reference,
    phase_delay_solve,
    stage1_control,
    stage2_control,
)

__all__ = [
    "REFERENCE_VARIANTS",
    "FrameFunctions",
    "RadiusReport",
    "ReferenceTrajectory",
    "XfTarget",
    "build_reference",
    "estimate_target_radius",
    "eta_sweep",
    "extend_reference",
    "family_verdict",
    "linear_control_around_ref",
    "load_reference_bundle",
    "phase_delay_solve",
    "project_Xf",
    "random_admissible_targets",
    "reference_frame_functions",
    "riesz_gap",
    "rotated_targets",
    "save_reference_bundle",
    "solve_local_control",
    "stage1_control",
    "stage2_control",
]
