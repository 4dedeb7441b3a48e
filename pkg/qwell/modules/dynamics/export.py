# qwell/modules/dynamics/export.py
from typing import Any, Dict, List

import numpy as np

from qwell.core.reports import write_csv, write_json
from qwell.modules.dynamics.states import Trajectory

TRAJECTORY_HEADER = ["t", "j", "k", "re", "im"]


def trajectory_rows(traj: Trajectory, stride: int = 1, modes: int = None) -> List[List[Any]]:
    """Rows (t, j, k, Re a, Im a) with 1-based j, k; every stride-th frame plus the last."""
    stride = max(1, int(stride))
    idx = list(range(0, len(traj), stride))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)
    K = traj.coeffs.shape[2] if modes is None else min(modes, traj.coeffs.shape[2])
    rows = []
    for i in idx:
        t = float(traj.times[i])
        for j, row in enumerate(traj.coeffs[i]):
            for k in range(K):
                rows.append([t, j + 1, k + 1, float(row[k].real), float(row[k].imag)])
    return rows


def export_trajectory_csv(traj: Trajectory, path: str, stride: int = 1, modes: int = None) -> str:
    return write_csv(path, TRAJECTORY_HEADER, trajectory_rows(traj, stride, modes))


def trajectory_summary(traj: Trajectory) -> Dict[str, Any]:
    summary = traj.summary()
    summary["final_gram"] = traj.final.gram()
    summary["final_h3_norms"] = traj.final.h3_norms()
    summary["times"] = {"start": float(traj.times[0]), "end": float(traj.times[-1])}
    if traj.control is not None:
        summary["control"] = traj.control.to_dict()
    return summary


def export_trajectory_summary(traj: Trajectory, path: str, extra: Dict[str, Any] = None) -> str:
    payload = trajectory_summary(traj)
    if extra:
        payload.update(extra)
    return write_json(path, payload)


def endpoint_error(a: np.ndarray, b: np.ndarray) -> float:
    """Largest row-wise L2 distance between two coefficient matrices."""
    return float(np.max(np.linalg.norm(np.asarray(a) - np.asarray(b), axis=-1)))
