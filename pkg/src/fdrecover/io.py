"""
Panel CSV and JSON helpers.

Panel CSV layout: the first line lists the grid points, every further line
is one curve.  Values use 17 significant digits, UTF-8 and LF line endings.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import Panel, Role, SamplingGrid
from .errors import InvalidInput


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _format_row(values) -> str:
    return ",".join(format_float(v) for v in values)


def panel_to_csv(panel: Panel) -> str:
    lines = [_format_row(panel.grid.points)]
    lines.extend(_format_row(row) for row in panel.values)
    return "\n".join(lines) + "\n"


def write_panel(path, panel: Panel) -> None:
    Path(path).write_bytes(panel_to_csv(panel).encode("utf-8"))


def parse_panel(text: str, role=Role.OBSERVED, source: str = "<csv>") -> Panel:
    """Parse panel CSV text; errors name the offending line and field."""
    rows = [r for r in csv.reader(text.splitlines())]
    rows = [(n, r) for n, r in enumerate(rows, start=1) if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise InvalidInput(f"{source}: need a grid line and at least one curve")

    def floats(n, row):
        out = []
        for k, cell in enumerate(row, start=1):
            try:
                out.append(float(cell))
            except ValueError:
                raise InvalidInput(f"{source}: line {n}, field {k}: not a number: {cell!r}") from None
        return out

    n0, head = rows[0]
    grid_pts = floats(n0, head)
    try:
        grid = SamplingGrid(grid_pts)
    except InvalidInput as exc:
        raise InvalidInput(f"{source}: line {n0}: invalid grid: {exc}") from None
    values = []
    for n, row in rows[1:]:
        if len(row) != len(grid_pts):
            raise InvalidInput(f"{source}: line {n}: expected {len(grid_pts)} fields, got {len(row)}")
        vals = floats(n, row)
        bad = [k for k, v in enumerate(vals, start=1) if not np.isfinite(v)]
        if bad:
            raise InvalidInput(f"{source}: line {n}, field {bad[0]}: value is not finite")
        values.append(vals)
    return Panel(np.array(values), grid, role)


def read_panel(path, role=Role.OBSERVED) -> Panel:
    try:
        text = Path(path).read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidInput(f"{path}: not valid UTF-8: {exc}") from None
    return parse_panel(text, role, str(path))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, non-finite floats as null, trailing newline."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_bytes(dumps(obj).encode("utf-8"))


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def write_rows(path, header, rows) -> None:
    """Write a plain CSV table; floats keep 17 significant digits."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
