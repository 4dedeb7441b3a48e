from qwell.modules.linearized_analysis.endpoint import check_obstruction_identity, first_order_endpoint, measure_linear_targets
from qwell.modules.linearized_analysis.synthesis import synth_linear_control
from qwell.modules.linearized_analysis.targets import (
    VARIANT_WEIGHTS,
    LinearTargets,
    canonical_index_set,
    diag_combo_value,
    random_linear_targets,
    variant_weights,
)

__all__ = [
    "VARIANT_WEIGHTS",
    "LinearTargets",
    "canonical_index_set",
    "check_obstruction_identity",
    "diag_combo_value",
    "first_order_endpoint",
    "measure_linear_targets",
    "random_linear_targets",
    "synth_linear_control",
    "variant_weights",
]
