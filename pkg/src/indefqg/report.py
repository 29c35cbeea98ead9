"""Deterministic CSV output.

Floats are written with ``repr`` (shortest string that round-trips), so equal
inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import math
import numbers
from typing import Iterable, Sequence

import numpy as np


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        x = float(value)
        return "nan" if math.isnan(x) else repr(x)
    return str(value)


def header_line(command: str, version: str, settings: dict) -> str:
    parts = [f"command={command}", f"version={version}"]
    parts += [f"{k}={fmt(v)}" for k, v in sorted(settings.items())]
    return "# " + " ".join(parts)


def render_csv(header: str, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> tuple[str, list[str], list[list[str]]]:
    lines = text.splitlines()
    header = lines[0] if lines and lines[0].startswith("#") else ""
    body = lines[1:] if header else lines
    rows = list(csv.reader(body))
    return header, rows[0], rows[1:]
