from qwell.modules.moment_solver.frequencies import (
    FrequencyEntry,
    FrequencySet,
    MomentTargets,
    build_frequency_set,
    canonical_pairs,
    first_row_pairs,
    moment_problem_from_json,
    moment_problem_to_json,
    targets_from_pairs,
)
from qwell.modules.moment_solver.solver import (
    gram_condition,
    leakage_report,
    project_VT,
    solve_moments,
    solve_weighted_moments,
    verify_moments,
    vt_window,
)

__all__ = [
    "FrequencyEntry",
    "FrequencySet",
    "MomentTargets",
    "build_frequency_set",
    "canonical_pairs",
    "first_row_pairs",
    "gram_condition",
    "leakage_report",
    "moment_problem_from_json",
    "moment_problem_to_json",
    "project_VT",
    "solve_moments",
    "solve_weighted_moments",
    "targets_from_pairs",
    "verify_moments",
    "vt_window",
]
