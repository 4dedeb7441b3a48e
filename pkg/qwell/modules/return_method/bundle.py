# qwell/modules/return_method/bundle.py
"""Reference bundles: control.csv (n, t, u) plus reference.json (construction metadata and residuals)."""
import json
import logging
import os
from typing import Any, Dict

import numpy as np

from qwell.core.exceptions import ConfigError, InputError, NumericalError
from qwell.core.reports import build_report, read_csv, write_csv, write_json
from qwell.modules.dynamics.propagator import propagate
from qwell.modules.dynamics.signals import ControlSignal
from qwell.modules.dynamics.states import free_frame
from qwell.modules.return_method.reference import ReferenceTrajectory
from qwell.modules.spectral_core.coupling import CouplingData
from qwell.modules.spectral_core.dipole import DipoleMoment

logger = logging.getLogger("Qwell.ReturnMethod")

CONTROL_FILE = "control.csv"
META_FILE = "reference.json"
_RELOAD_TOL = 1e-9


def save_reference_bundle(ref: ReferenceTrajectory, data: CouplingData, directory: str,
                          config: Dict[str, Any] = None) -> Dict[str, str]:
    u = ref.control
    rows = [(n, t, value) for n, (t, value) in enumerate(zip(u.interval_starts, u.values))]
    control_path = write_csv(os.path.join(directory, CONTROL_FILE), ["n", "t", "u"], rows)
    payload = {
        **ref.summary(),
        "dt": u.dt,
        "zero_tail": u.zero_tail,
        "n_intervals": u.n_intervals,
        "K_max": data.K_max,
        "N": ref.N,
        "dipole": data.mu.to_spec(),
        "endpoint": ref.endpoint.coeffs,
    }
    meta_path = write_json(os.path.join(directory, META_FILE), build_report("build-reference", config or {}, payload))
    return {"control": control_path, "metadata": meta_path}


def load_reference_bundle(directory: str, data: CouplingData) -> ReferenceTrajectory:
    """Rebuilds the reference and re-propagates it; the recorded endpoint must be reproduced."""
    meta_path = os.path.join(directory, META_FILE)
    control_path = os.path.join(directory, CONTROL_FILE)
    if not (os.path.exists(meta_path) and os.path.exists(control_path)):
        raise ConfigError(f"No reference bundle in {directory}")
    with open(meta_path, "r", encoding="utf-8") as f:
        meta = json.load(f)["result"]
    if meta["K_max"] != data.K_max:
        raise InputError(f"Bundle was built with K_max={meta['K_max']}, coupling data has {data.K_max}")
    if DipoleMoment.from_spec(meta["dipole"]) != data.mu:
        raise InputError("Bundle was built for a different dipole moment")

    values = np.array([float(row["u"]) for row in read_csv(control_path)])
    if values.size != meta["n_intervals"]:
        raise InputError(f"Bundle control has {values.size} intervals, metadata says {meta['n_intervals']}")
    control = ControlSignal(values, meta["dt"], 0.0, zero_tail=meta["zero_tail"])
    traj = propagate(free_frame(meta["N"], data.K_max, 0.0), control, data)

    recorded = np.array([[complex(re, im) for re, im in row] for row in meta["endpoint"]])
    drift = float(np.max(np.abs(traj.final.coeffs - recorded)))
    if drift > _RELOAD_TOL:
        raise NumericalError(f"Reloaded reference ends {drift:.3e} away from the recorded endpoint")
    ref = ReferenceTrajectory(
        control=control,
        traj=traj,
        eta=meta["eta"],
        eps=meta["eps"],
        eps1=meta["eps1"],
        T1=meta["T1"],
        thetas=np.array(meta["thetas"], dtype=float),
        T_eta=meta["T_eta"],
        theta_eta=meta["theta_eta"],
        variant=meta["variant"],
        K_pump=meta["K_pump"],
        stage_times=meta["stage_times"],
        residuals=meta["residuals"],
        meta={"bundle": directory, "reload_drift": drift},
    )
    logger.info(f"✅ Loaded reference bundle {directory} (reload drift {drift:.1e})")
    return ref
