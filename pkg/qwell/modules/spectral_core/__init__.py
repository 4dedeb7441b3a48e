from qwell.modules.spectral_core.basis import BasisSpec, eigenfunction, eigenvalues
from qwell.modules.spectral_core.coupling import (
    CouplingData,
    build_coupling_data,
    coupling_coefficient,
    coupling_matrix,
    coupling_row,
    grad_coupling_coefficient,
    gradient_matrix,
    transport_matrix,
)
from qwell.modules.spectral_core.dipole import DipoleMoment
from qwell.modules.spectral_core.hypotheses import check_hypothesis_mu, hypotheses_report

__all__ = [
    "BasisSpec",
    "CouplingData",
    "DipoleMoment",
    "build_coupling_data",
    "check_hypothesis_mu",
    "coupling_coefficient",
    "coupling_matrix",
    "coupling_row",
    "eigenfunction",
    "eigenvalues",
    "grad_coupling_coefficient",
    "gradient_matrix",
    "hypotheses_report",
    "transport_matrix",
]
