# qwell/modules/cli/commands/reference.py
from functools import partial
from typing import Any, Dict

import anyio

from qwell.core.command_base import BaseCommand
from qwell.core.models import CommandInput, CommandOutput
from qwell.modules.cli.common import coupling_from_params, output_dir, success, write_report
from qwell.modules.return_method.bundle import save_reference_bundle
from qwell.modules.return_method.local_control import eta_sweep, family_verdict
from qwell.modules.return_method.reference import ReferenceTrajectory, build_reference, variant_particles
from qwell.modules.spectral_core.coupling import CouplingData


def build_kwargs(params: Dict[str, Any]) -> Dict[str, Any]:
    return {key: params[key] for key in ("eps", "eps1", "T1", "variant", "K_pump", "M", "eta_max")}


def reference_from_params(data: CouplingData, params: Dict[str, Any]) -> ReferenceTrajectory:
    return build_reference(data, params["eta"], **build_kwargs(params))


class BuildReferenceCommand(BaseCommand):
    def __init__(self):
        super().__init__(name="BuildReference")

    async def _execute(self, input_data: CommandInput) -> CommandOutput:
        params = input_data.params
        data = coupling_from_params(params, N=variant_particles(params["variant"]))
        out = output_dir(input_data, params)

        ref = await anyio.to_thread.run_sync(partial(reference_from_params, data, params))
        files = save_reference_bundle(ref, data, out, params)
        verdict = family_verdict(ref, data)
        payload = {"reference": ref.summary(), "family": verdict}
        if params.get("check_scaling") and ref.eta > 0:
            payload["eta_sweep"] = await anyio.to_thread.run_sync(
                partial(eta_sweep, data, ref.eta, ref=ref, **build_kwargs(params))
            )
        checks = write_report(out, "reference_checks.json", "build-reference", params, payload)
        return success(
            f"Reference {ref.variant} built: T_eta={ref.T_eta:.6f}, theta_eta={ref.theta_eta:.6f}, family {verdict['verdict']}",
            payload,
            [files["control"], files["metadata"], checks],
        )
