"""Tiny CSV writer shared by the export surfaces.

Values are written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""

from __future__ import annotations

import io
import pathlib

import numpy as np


def format_value(v: float) -> str:
    return f"{float(v):.17g}"


def write_csv(dest, header: list[str], columns: list[np.ndarray]) -> None:
    """Write named columns to ``dest`` (path or file-like), header first.

    All columns must share one length; an empty column list or zero-length
    columns produce a header-only file.
    """
    lengths = {len(c) for c in columns}
    if len(lengths) > 1:
        raise ValueError(f"columns have differing lengths {sorted(lengths)}")
    if columns and len(columns) != len(header):
        raise ValueError("one header entry per column is required")
    n = lengths.pop() if lengths else 0

    def _emit(fh):
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(format_value(c[i]) for c in columns) + "\n")

    if isinstance(dest, (str, pathlib.Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            _emit(fh)
    elif isinstance(dest, io.TextIOBase) or hasattr(dest, "write"):
        _emit(dest)
    else:
        raise TypeError(f"cannot write CSV to {type(dest)!r}")


def read_csv_columns(path) -> tuple[list[str], list[np.ndarray]]:
    """Read back a file written by :func:`write_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if not rows:
        return header, [np.array([]) for _ in header]
    cols = [np.array([float(r[j]) for r in rows]) for j in range(len(header))]
    return header, cols
