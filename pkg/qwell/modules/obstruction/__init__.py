from qwell.modules.obstruction.coercivity import CoercivityReport, coercivity_report, coercivity_scan, form_matrix, rayleigh_max_at
from qwell.modules.obstruction.experiments import (
    ExpansionReport,
    ReachabilityReport,
    band_limited_control,
    direction_sign,
    expansion_order_check,
    forbidden_target,
    reachability_experiment,
    signed_functional,
)
from qwell.modules.obstruction.forms import (
    KernelTable,
    causal_sine_form,
    combined_form,
    combined_form_parts,
    kernel_h,
    quadratic_form_calQ,
    quadratic_form_Q,
)

__all__ = [
    "CoercivityReport",
    "ExpansionReport",
    "KernelTable",
    "ReachabilityReport",
    "band_limited_control",
    "causal_sine_form",
    "coercivity_report",
    "coercivity_scan",
    "combined_form",
    "combined_form_parts",
    "direction_sign",
    "expansion_order_check",
    "forbidden_target",
    "form_matrix",
    "kernel_h",
    "quadratic_form_Q",
    "quadratic_form_calQ",
    "rayleigh_max_at",
    "reachability_experiment",
    "signed_functional",
]
