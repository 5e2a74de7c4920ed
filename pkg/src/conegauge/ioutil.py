"""Deterministic JSON/CSV emission: '.' decimal, 17 significant digits."""

from __future__ import annotations

import json
from typing import Iterable


def fmt(x) -> str:
    """Round-trippable float formatting for CSV cells."""
    return f"{float(x):.17g}"


def dumps_json(obj) -> str:
    """Stable JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))


def csv_lines(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(c) if isinstance(c, float) else str(c) for c in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_lines(header, rows))
