"""Machine-readable run reports.

Floats are written with ``repr`` precision so every number survives a JSON
round trip exactly; non-finite values become ``null``.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from typing import Any

from . import __version__

SCHEMA_VERSION = "1"


def _clean(obj: Any) -> Any:
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):  # numpy scalar
        return _clean(obj.item())
    return obj


def new_report(command: str, *, seed: int, deterministic: bool, inputs: dict | None = None,
               options: dict | None = None) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "version": __version__,
        "timestamp": None if deterministic else datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "inputs": inputs or {},
        "options": options or {},
        "warnings": [],
    }
    return report


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=False, allow_nan=False) + "\n"
