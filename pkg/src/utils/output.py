"""
CSV and structured-text writers
"""

import json
import logging
import os
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from src.models.schemas import RunConfig

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.15g"

COLUMN_DOCS = {
    "h": "semiclassical parameter",
    "inv_h": "1/h",
    "hbar": "sqrt(h)",
    "gap_formula": "predicted lambda2 - lambda1",
    "envelope": "prediction with |cos| replaced by 1",
    "phase_mod_2pi": "L f(h) mod 2 pi",
    "gap_effective": "effective-operator gap times h^{3/2}",
    "rel_err_effective": "gap_effective / reference - 1",
    "nu1": "lowest 2D eigenvalue (rescaled)",
    "nu2": "second 2D eigenvalue (rescaled)",
    "gap_2d": "h (nu2 - nu1)",
    "rel_err_2d": "gap_2d / gap_formula - 1",
    "residual1": "eigen residual of nu1",
    "residual2": "eigen residual of nu2",
    "ns": "tangential nodes",
    "ntau": "normal nodes",
    "reason": "why oracle values are missing",
    "s": "arclength",
    "x": "boundary point x",
    "y": "boundary point y",
    "kappa": "curvature",
    "V": "scaled effective potential",
    "v": "C1 (kappa_max - kappa)",
}


def _header(frame: pd.DataFrame, title: str) -> str:
    described = "; ".join(f"{c}: {COLUMN_DOCS.get(c, c)}" for c in frame.columns)
    return f"# {title}\n# {described}\n"


def write_csv(frame: pd.DataFrame, path: str, title: str) -> str:
    """
    Write a table with a '#' header documenting its columns

    Floats use '.' and 15 significant digits, so identical inputs give identical files.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(_header(frame, title))
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"✅ Wrote {len(frame)} rows to {path}")
    return path


def write_config_echo(config: RunConfig, directory: str) -> str:
    """Resolved config next to the outputs, re-parseable by --config"""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "resolved_config.txt")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(config.to_text())
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return _jsonable(value.model_dump(mode="python"))
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def to_json(payload: Any) -> str:
    """Structured text for --json and the HTTP surface; non-finite floats become null"""
    return json.dumps(_jsonable(payload), indent=2, sort_keys=False)


def format_table(rows: Dict[str, Any], title: Optional[str] = None) -> str:
    """Two-column plain-text table"""
    width = max((len(k) for k in rows), default=0)
    lines = [title] if title else []
    for key, value in rows.items():
        if isinstance(value, float):
            value = f"{value:.12g}"
        lines.append(f"{key.ljust(width)}  {value}")
    return "\n".join(lines)
