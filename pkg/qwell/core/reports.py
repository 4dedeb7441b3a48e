# qwell/core/reports.py
"""Report writers. Reports embed the resolved config and toolkit version and carry no timestamps,
so identical config + seed give byte-identical files."""
import csv
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
from pydantic import BaseModel

from qwell import __version__

logger = logging.getLogger("Qwell.Reports")


def to_jsonable(value: Any) -> Any:
    """Recursively convert numpy / pydantic / complex values into JSON-native types."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(np.real(value)), float(np.imag(value))]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def build_report(command: str, config: Dict[str, Any], payload: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "command": command,
        "qwell_version": __version__,
        "config": to_jsonable(config),
        "result": to_jsonable(payload),
    }


def write_json(path: str, report: Dict[str, Any]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_jsonable(report), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"📝 Wrote report {path}")
    return path


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    logger.info(f"📝 Wrote table {path}")
    return path


def read_csv(path: str) -> List[Dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
