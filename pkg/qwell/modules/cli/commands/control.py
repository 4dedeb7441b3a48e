# qwell/modules/cli/commands/control.py
import os
from functools import partial
from typing import Any, Dict, List

import anyio
import numpy as np

from qwell.core.command_base import BaseCommand
from qwell.core.exceptions import InputError, QwellBaseException
from qwell.core.models import CommandInput, CommandOutput
from qwell.core.reports import write_csv
from qwell.core.workers import map_in_threads
from qwell.modules.cli.commands.reference import reference_from_params
from qwell.modules.cli.common import coupling_from_params, output_dir, success, write_report
from qwell.modules.dynamics.states import StateFrame
from qwell.modules.return_method.bundle import load_reference_bundle
from qwell.modules.return_method.local_control import (
    estimate_target_radius,
    random_admissible_targets,
    solve_local_control,
)
from qwell.modules.return_method.reference import ReferenceTrajectory, extend_reference, normalize_variant, variant_particles


def targets_from_spec(spec: Dict[str, Any], ref: ReferenceTrajectory, seed: int) -> List[StateFrame]:
    kind = spec["type"]
    if kind == "reference":
        return [ref.endpoint.copy()]
    if kind == "random":
        return random_admissible_targets(ref, spec["radius"], np.random.default_rng(seed), spec["count"])
    coeffs = np.array(spec["coeffs"], dtype=float)
    if coeffs.ndim != 3 or coeffs.shape[-1] != 2:
        raise InputError(f"Explicit targets must be [N][K][re, im], got shape {coeffs.shape}")
    return [StateFrame(t=ref.endpoint.t, coeffs=coeffs[..., 0] + 1j * coeffs[..., 1])]


class ControlCommand(BaseCommand):
    """Local exact controllability around a return-method reference: one control per target."""

    def __init__(self):
        super().__init__(name="Control")

    async def _execute(self, input_data: CommandInput) -> CommandOutput:
        params = input_data.params
        out = output_dir(input_data, params)

        if params["reference_bundle"]:
            variant = normalize_variant(params["variant"])
            data = coupling_from_params(params, N=variant_particles(variant))
            ref = load_reference_bundle(params["reference_bundle"], data)
            if ref.variant != variant:
                self.logger.warning(f"⚠️ Bundle variant {ref.variant} overrides configured {variant}")
                data = coupling_from_params(params, N=ref.N)
        else:
            data = coupling_from_params(params, N=variant_particles(params["variant"]))
            ref = await anyio.to_thread.run_sync(partial(reference_from_params, data, params))
        ref = extend_reference(ref, params["extra_time"], data)

        targets = targets_from_spec(params["targets"], ref, params["seed"])

        def solve(target: StateFrame) -> Dict[str, Any]:
            try:
                return {"control": solve_local_control(
                    data, target, ref=ref, tol=params["tol"], max_iter=params["max_iter"],
                    radius_max=params["radius_max"],
                )}
            except QwellBaseException as e:
                return {"error": e}

        results = await map_in_threads(solve, targets, params["threads"])
        failures = [r["error"] for r in results if "error" in r]
        if failures:
            self.logger.error(f"❌ {len(failures)} of {len(targets)} targets failed")
            raise failures[0]

        files: List[str] = []
        solutions = []
        for i, r in enumerate(results):
            u = r["control"]
            rows = [(n, t, value) for n, (t, value) in enumerate(zip(u.interval_starts, u.values))]
            files.append(write_csv(os.path.join(out, f"control_{i}.csv"), ["n", "t", "u"], rows))
            solutions.append({"index": i, "l2_norm": u.l2_norm(), "zero_tail": u.zero_tail,
                              **{k: u.meta[k] for k in ("iterations", "residual_history", "endpoint_error",
                                                        "target_distance", "T_final", "theta_eta")}})

        payload: Dict[str, Any] = {
            "reference": ref.summary(),
            "solutions": solutions,
            "max_endpoint_error": max(s["endpoint_error"] for s in solutions),
        }
        search = params.get("radius_search")
        if search:
            radius = await anyio.to_thread.run_sync(partial(
                estimate_target_radius, ref, data, search["r_lo"], search["r_hi"], search["directions"],
                params["seed"], search["bisections"], params["threads"],
            ))
            payload["radius"] = radius.model_dump()

        files.append(write_report(out, "control.json", "control", params, payload))
        return success(
            f"Reached {len(solutions)} target(s); max endpoint error {payload['max_endpoint_error']:.2e}",
            payload,
            files,
        )
