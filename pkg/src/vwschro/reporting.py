"""Deterministic CSV/JSON/plot-script writers shared by the net-analysis
layer and the experiment runner.

Identical inputs produce byte-identical files: floats are rendered with
``repr`` (shortest round-trip form), JSON keys are sorted, and no
timestamps or environment data enter the outputs.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def write_csv(path: Path, header, rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: Path):
    lines = Path(path).read_text().strip().split("\n")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")
    return path


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def write_plot_script(path: Path, csv_name: str, xlabel: str, ylabel: str,
                      columns=(1, 2), logscale: bool = True) -> Path:
    """Emit a gnuplot script driving one CSV table."""
    path = Path(path)
    lines = [
        "set datafile separator ','",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logscale:
        lines.append("set logscale xy")
    lines.append(
        f"plot '{csv_name}' using {columns[0]}:{columns[1]} with linespoints title '{ylabel}'"
    )
    path.write_text("\n".join(lines) + "\n")
    return path
