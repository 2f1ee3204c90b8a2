"""CSV reading/writing with strict parsing and byte-stable output.

Files are headerless by default (``header=True`` skips one line), one row of
comma-separated decimal numbers per sample. Parse failures name the line and
column. Output uses ``%.17g`` so round-tripping is exact and repeated runs
are byte-identical.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import InputError


def read_matrix(path: str | os.PathLike, header: bool = False) -> np.ndarray:
    """Read an ``n x d`` matrix of reals from a CSV file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except FileNotFoundError:
        raise InputError(f"input file not found: {path}") from None
    start = 1 if header else 0
    rows: list[list[float]] = []
    width = None
    for line_no, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise InputError(
                f"{path}: line {line_no} has {len(fields)} fields, expected {width}"
            )
        row = []
        for col_no, field in enumerate(fields, start=1):
            try:
                value = float(field.strip())
            except ValueError:
                raise InputError(
                    f"{path}: line {line_no}, column {col_no}: cannot parse {field.strip()!r}"
                ) from None
            row.append(value)
        rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def write_matrix(path: str | os.PathLike, matrix: np.ndarray) -> None:
    """Write a matrix as headerless CSV with exact float formatting."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for row in matrix:
            handle.write(",".join(f"{v:.17g}" for v in row))
            handle.write("\n")
