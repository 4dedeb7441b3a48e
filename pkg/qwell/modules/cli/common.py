# qwell/modules/cli/common.py
import logging
import os
from typing import Any, Dict, List, Optional

from qwell.core.config import settings
from qwell.core.models import CommandInput, CommandOutput
from qwell.core.reports import build_report, write_json
from qwell.modules.spectral_core.basis import BasisSpec
from qwell.modules.spectral_core.coupling import CouplingData, build_coupling_data
from qwell.modules.spectral_core.dipole import DipoleMoment

logger = logging.getLogger("Qwell.Cli")


def coupling_from_params(params: Dict[str, Any], N: Optional[int] = None) -> CouplingData:
    """Dipole + truncation from a validated run config; N overrides the configured particle count."""
    mu = DipoleMoment.from_spec(params["dipole"])
    spec = BasisSpec(K_max=int(params["K_max"]), quadrature_order=int(params["quadrature_order"]))
    return build_coupling_data(mu, spec, int(params["N"] if N is None else N))


def output_dir(input_data: CommandInput, params: Dict[str, Any]) -> str:
    return params.get("out") or input_data.out_dir or settings.QWELL_OUTPUT_DIR


def write_report(directory: str, name: str, command: str, config: Dict[str, Any], payload: Dict[str, Any]) -> str:
    return write_json(os.path.join(directory, name), build_report(command, config, payload))


def success(message: str, data: Any, files: List[str]) -> CommandOutput:
    return CommandOutput(status="success", message=message, data=data, files=files)
