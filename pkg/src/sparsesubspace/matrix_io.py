"""Plain-text matrix files.

Format: a header line with the two dimensions (``p d`` for bases, ``n p``
for data), followed by one whitespace-separated line per row.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch


def format_matrix(M) -> str:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    buf = io.StringIO()
    buf.write(f"{M.shape[0]} {M.shape[1]}\n")
    np.savetxt(buf, M, fmt="%.17g")
    return buf.getvalue()


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DimensionMismatch("empty matrix file")
    try:
        rows, cols = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise DimensionMismatch(f"bad header line {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != rows:
        raise DimensionMismatch(f"header declares {rows} rows, found {len(body)}")
    values = []
    for i, ln in enumerate(body):
        try:
            row = [float(t) for t in ln.split()]
        except ValueError as exc:
            raise DimensionMismatch(f"row {i} is not numeric: {ln!r}") from exc
        if len(row) != cols:
            raise DimensionMismatch(f"row {i} has {len(row)} entries, header declares {cols}")
        values.append(row)
    return np.array(values, dtype=float).reshape(rows, cols)


def write_matrix(path, M):
    Path(path).write_text(format_matrix(M))


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())
