# qwell/modules/cli/commands/simulate.py
import os
from typing import Any, Dict

import numpy as np

from qwell.core.command_base import BaseCommand
from qwell.core.models import CommandInput, CommandOutput
from qwell.core.workers import map_in_threads
from qwell.modules.cli.common import coupling_from_params, output_dir, success, write_report
from qwell.modules.dynamics.export import export_trajectory_csv, trajectory_summary
from qwell.modules.dynamics.propagator import propagate
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import free_frame
from qwell.modules.obstruction.experiments import band_limited_control
from qwell.modules.spectral_core.coupling import CouplingData


def control_from_spec(spec: Dict[str, Any], T: float, M: int) -> ControlSignal:
    kind = spec["type"]
    if kind == "zero":
        return ControlSignal.zeros(T, M)
    if kind == "samples":
        return ControlSignal(np.asarray(spec["values"], dtype=float), T / M, 0.0)
    tones = spec["tones"]
    a = np.array([tone["amplitude"] for tone in tones])
    w = np.array([tone["omega"] for tone in tones])
    p = np.array([tone["phase"] for tone in tones])
    return ControlSignal.from_function(lambda t: np.cos(np.asarray(t)[..., None] * w + p) @ a, T, M)


def _invariant_trial(data: CouplingData, seed_seq: np.random.SeedSequence, T: float, M: int,
                     budget: float, modes: int) -> Dict[str, float]:
    rng = np.random.default_rng(seed_seq)
    u = band_limited_control(rng, T, M, modes)
    u = u.scaled(budget * rng.uniform() / max(u.l2_norm(), 1e-300))
    traj = propagate(free_frame(data.N, data.K_max, 0.0), u, data)
    return {"u_norm": u.l2_norm(), "gram_drift": traj.gram_drift(), "norm_drift": traj.norm_drift(),
            "tail_mass": traj.tail_mass()}


class SimulateCommand(BaseCommand):
    """Propagates (phi_1..phi_N) under the configured control; optional batch of random controls."""

    def __init__(self):
        super().__init__(name="Simulate")

    async def _execute(self, input_data: CommandInput) -> CommandOutput:
        params = input_data.params
        data = coupling_from_params(params)
        out = output_dir(input_data, params)
        T, M = params["T"], params["M"]

        u = control_from_spec(params["control"], T, M)
        traj = propagate(free_frame(data.N, data.K_max, 0.0), u, data)
        csv_path = export_trajectory_csv(traj, os.path.join(out, "trajectory.csv"), params["stride"], params["export_modes"])
        payload: Dict[str, Any] = {"trajectory": trajectory_summary(traj)}

        trials = params["random_controls"]
        if trials:
            seeds = np.random.SeedSequence(params["seed"]).spawn(trials)
            results = await map_in_threads(
                lambda sq: _invariant_trial(data, sq, T, M, params["random_budget"], params["random_modes"]),
                seeds,
                params["threads"],
            )
            payload["random_controls"] = {
                "trials": trials,
                "max_gram_drift": max(r["gram_drift"] for r in results),
                "max_norm_drift": max(r["norm_drift"] for r in results),
                "max_tail_mass": max(r["tail_mass"] for r in results),
                "per_trial": results,
            }
            self.logger.info(f"🔍 {trials} random controls: max Gram drift {payload['random_controls']['max_gram_drift']:.2e}")

        json_path = write_report(out, "simulation.json", "simulate", params, payload)
        drift = payload["trajectory"]["gram_drift"]
        return success(f"Propagated {data.N} states to T={T} (Gram drift {drift:.2e})", payload, [csv_path, json_path])
