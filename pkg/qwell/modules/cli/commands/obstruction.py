# qwell/modules/cli/commands/obstruction.py
import os
from functools import partial
from typing import Any, Dict, List

import anyio

from qwell.core.command_base import BaseCommand
from qwell.core.models import CommandInput, CommandOutput
from qwell.core.reports import write_csv
from qwell.modules.cli.common import coupling_from_params, output_dir, success, write_report
from qwell.modules.obstruction.coercivity import coercivity_scan
from qwell.modules.obstruction.experiments import expansion_order_check, reachability_experiment

_PARTICLES = {"N2": 2, "N3": 3}


class ObstructionCommand(BaseCommand):
    """
    Coercivity scan of the signed quadratic form over a grid of horizons, then (optionally)
    random small-control reachability trials and the expansion-order check.
    """

    def __init__(self):
        super().__init__(name="Obstruction")

    async def _execute(self, input_data: CommandInput) -> CommandOutput:
        params = input_data.params
        variant = params["variant"]
        data = coupling_from_params(params, N=_PARTICLES[variant])
        out = output_dir(input_data, params)
        threads = params["threads"]
        horizons = _horizons(params)

        # the scans fan out with their own thread pools, so they run off the event loop
        scan = await anyio.to_thread.run_sync(
            partial(coercivity_scan, data, horizons, params["resolution"], variant, params["K_trunc"], threads)
        )
        payload: Dict[str, Any] = {"coercivity": scan.model_dump()}
        files: List[str] = [write_csv(os.path.join(out, "coercivity.csv"), ["T", "rayleigh_max"], scan.rows())]

        if not scan.applicable:
            self.logger.warning(f"⚠️ {variant} obstruction not applicable: scalar {scan.scalar:.3e}")
        else:
            reach = params.get("reachability")
            if reach:
                # no negative horizon in the scan counts as a zero horizon
                T_star = scan.T_star_est if scan.T_star_est is not None else 0.0
                report = await anyio.to_thread.run_sync(partial(
                    reachability_experiment, data, reach["T"], variant,
                    trials=reach["trials"], seed=params["seed"], budget=reach["budget"],
                    modes=reach["modes"], M=reach["M"], K_window=reach["K_window"], threads=threads,
                    T_star=T_star,
                ))
                payload["reachability"] = report.model_dump()
            expansion = params.get("expansion")
            if expansion:
                report = await anyio.to_thread.run_sync(partial(
                    expansion_order_check, data, expansion["j"], expansion["T"],
                    eps_list=expansion["eps"], M=expansion["M"],
                ))
                payload["expansion"] = report.model_dump()

        files.append(write_report(out, "obstruction.json", "obstruction", params, payload))
        if not scan.applicable:
            message = f"{variant} obstruction not applicable (scalar vanishes)"
        else:
            message = f"{variant} coercivity: T_star_est={scan.T_star_est}"
            if "reachability" in payload:
                message += f", {payload['reachability']['violations']} sign violations"
        return success(message, payload, files)


def _horizons(params: Dict[str, Any]) -> List[float]:
    if params.get("T_grid"):
        return sorted(float(T) for T in params["T_grid"])
    T_max, count = params["T_max"], params["T_count"]
    return [T_max * (n + 1) / count for n in range(count)]
