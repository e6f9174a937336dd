"""JSON reports: complex numbers as ``[re, im]``, schema-versioned, byte-stable."""
from __future__ import annotations

import dataclasses
import json
import math
import os
from pathlib import Path
from typing import Any

import numpy as np

SCHEMA_VERSION = 1
OUTPUT_ENV = "MASTER_STR_OUTPUT_DIR"


def to_jsonable(obj: Any) -> Any:
    """Recursively convert dataclasses, numpy values and complex numbers."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return [_float(z.real), _float(z.imag)]
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    return obj


def _float(x: float):
    # JSON has no inf/nan; keep them readable
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def library_version() -> str:
    from . import __version__

    return __version__


def make_report(command: list[str], config: dict, cases: list[dict], extra: dict | None = None) -> dict:
    """Assemble a report; ``passed`` is true iff every case passed."""
    rep = {
        "schema_version": SCHEMA_VERSION,
        "library_version": library_version(),
        "command": list(command),
        "config": config,
        "cases": cases,
        "n_cases": len(cases),
        "n_failed": sum(1 for c in cases if not c.get("passed", False)),
    }
    rep["passed"] = rep["n_failed"] == 0
    if extra:
        rep.update(extra)
    return to_jsonable(rep)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def output_dir(explicit: str | None = None) -> Path:
    return Path(explicit or os.environ.get(OUTPUT_ENV, "."))


def write_report(report: dict, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(report))
    return path
