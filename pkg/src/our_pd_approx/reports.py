"""Report helpers for experiment commands.

Reports follow the {success: bool, schema: str, ...data} convention and are
written as JSON or CSV with round-trip exact floats.
"""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

SCHEMA_PREFIX = "our-pd-approx"
SCHEMA_VERSION = 1


def schema_name(kind: str) -> str:
    return f"{SCHEMA_PREFIX}/{kind}/v{SCHEMA_VERSION}"


def success_report(kind: str, **kwargs: Any) -> dict[str, Any]:
    """Create a successful report dict.

    Args:
        kind: Report kind, recorded in the versioned ``schema`` field
        **kwargs: Additional data to include in the report

    Returns:
        Dict with success=True, the schema name and all kwargs
    """
    return {"success": True, "schema": schema_name(kind), **kwargs}


def error_report(error: str, **kwargs: Any) -> dict[str, Any]:
    """Create an error report dict.

    Args:
        error: Error message
        **kwargs: Additional data to include in the report

    Returns:
        Dict with success=False, error message, and all kwargs
    """
    return {"success": False, "error": error, **kwargs}


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars and arrays to plain Python; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float | np.floating):
        number = float(value)
        return number if math.isfinite(number) else None
    if isinstance(value, Path):
        return str(value)
    return value


def dumps_json(data: Any) -> str:
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True)


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, float | np.floating):
        number = float(value)
        return repr(number) if math.isfinite(number) else ""
    return str(value)


def write_json(path: Path, data: dict[str, Any], timestamp: str | None = None) -> Path:
    payload = dict(data)
    if timestamp is not None:
        payload["generated"] = timestamp
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(payload) + "\n")
    return path


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    timestamp: str | None = None,
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if timestamp is not None:
            fh.write(f"# generated: {timestamp}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])
    return path
