"""Structured text reports and their JSON sidecars.

A report is a nested record (dicts, lists, scalars). The text form lists
scalars as ``key: value`` lines and lists of flat records as aligned tables;
the sidecar is the same record as sorted JSON. Neither contains timestamps,
so equal inputs give byte-identical files.
"""

import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """Convert numpy scalars, tuples and non-finite floats to JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, frozenset, set)):
        items = sorted(value) if isinstance(value, (frozenset, set)) else value
        return [_plain(v) for v in items]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _scalar(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list):
        return "[" + ", ".join(_scalar(v) for v in value) + "]"
    return str(value)


def _is_table(value: Any) -> bool:
    return (
        isinstance(value, list)
        and bool(value)
        and all(isinstance(row, dict) for row in value)
        and all(not isinstance(v, (dict,)) for row in value for v in row.values())
    )


def _table(rows: List[Dict[str, Any]], indent: str) -> List[str]:
    columns: List[str] = []
    for row in rows:
        columns.extend(c for c in row if c not in columns)
    cells = [[_scalar(row.get(c)) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    lines = [indent + "  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append(indent + "  ".join("-" * w for w in widths))
    for r in cells:
        lines.append(indent + "  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return lines


def _render(record: Dict[str, Any], depth: int) -> List[str]:
    indent = "  " * depth
    lines: List[str] = []
    for key, value in record.items():
        if isinstance(value, dict):
            lines.append(f"{indent}{key}:")
            lines.extend(_render(value, depth + 1))
        elif _is_table(value):
            lines.append(f"{indent}{key}:")
            lines.extend(_table(value, indent + "  "))
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            for position, item in enumerate(value):
                lines.append(f"{indent}{key}[{position}]:")
                lines.extend(_render(item, depth + 1))
        else:
            lines.append(f"{indent}{key}: {_scalar(value)}")
    return lines


def render_text(record: Dict[str, Any], title: str = "cox-reduce report") -> str:
    """Human-readable form of a report record."""
    plain = _plain(record)
    lines = [f"# {title}"]
    for key, value in plain.items():
        lines.append("")
        if isinstance(value, dict):
            lines.append(f"[{key}]")
            lines.extend(_render(value, 0))
        else:
            lines.extend(_render({key: value}, 0))
    return "\n".join(lines) + "\n"


def render_json(record: Dict[str, Any]) -> str:
    return json.dumps(_plain(record), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(
    record: Dict[str, Any],
    output: Optional[Path] = None,
    title: str = "cox-reduce report",
    stream=None,
) -> Sequence[Path]:
    """Write ``output`` (text) and ``output.json``; without ``output`` print the text.

    Returns the paths written.
    """
    text = render_text(record, title)
    if output is None:
        (stream if stream is not None else sys.stdout).write(text)
        return ()
    output = Path(output)
    sidecar = output.with_name(output.name + ".json")
    output.write_text(text, encoding="utf-8")
    sidecar.write_text(render_json(record), encoding="utf-8")
    logger.info("Wrote %s and %s", output, sidecar)
    return (output, sidecar)
