"""CSV/JSON emitters for analysis runs.

Every CSV starts with ``# figure: ...`` naming the plot it feeds, followed by
a plain header row. Floats are written with ``repr`` so reruns are
byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, figure, header, rows, notes=()):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# figure: {figure}\n")
        for note in notes:
            fh.write(f"# {note}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_table(path, figure, writer, payload):
    """Emit a table through one of the module-level ``write_*`` helpers."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# figure: {figure}\n")
        writer(payload, fh)
    return path


def write_distribution(path, figure, dist, notes=()):
    rows = [] if dist is None else list(dist.rows())
    return write_csv(path, figure, ("bin_lo", "bin_hi", "density", "count"), rows, notes)


def write_json(path, payload):
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path
