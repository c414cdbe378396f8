"""Delimited curve files and return preprocessing.

File layout: the first row holds the grid points, every following row is one
curve, in time order.  Comma-separated by default; tab is accepted and
detected from the header line.
"""
from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path

import numpy as np

from .fda import CurveSeries, Grid, InputError


class ParseError(InputError):
    """A curve file could not be parsed; the message names row and column."""


def _sniff_delimiter(first_line: str) -> str:
    return "\t" if "\t" in first_line else ","


def _parse_float(cell: str, row: int, col: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"row {row}, column {col}: non-numeric cell {cell.strip()!r}") from None
    if not np.isfinite(value):
        raise ParseError(f"row {row}, column {col}: non-finite value {cell.strip()!r}")
    return value


def read_curves(path, delimiter: str | None = None, label: str | None = None) -> CurveSeries:
    """Load a :class:`CurveSeries`; rows and columns in errors are 1-based."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    delim = delimiter or _sniff_delimiter(lines[0])
    rows = [r for r in csv.reader(lines, delimiter=delim) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: no rows")
    header = [_parse_float(c, 1, j + 1) for j, c in enumerate(rows[0])]
    if any(b <= a for a, b in zip(header, header[1:])):
        raise ParseError(f"{path}: row 1 (grid) is not strictly increasing")
    if len(header) < 3:
        raise ParseError(f"{path}: row 1 (grid) has {len(header)} points, need at least 3")
    body = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(
                f"{path}: row {i} has {len(row)} cells, expected {len(header)}"
            )
        body.append([_parse_float(c, i, j + 1) for j, c in enumerate(row)])
    if len(body) < CurveSeries.MIN_LENGTH:
        raise ParseError(
            f"{path}: {len(body)} curves, need at least {CurveSeries.MIN_LENGTH}"
        )
    return CurveSeries(Grid(header), np.array(body), label if label is not None else path.stem)


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_number(v: float) -> str:
    return format(float(v), ".17g")


def curves_to_text(series: CurveSeries, delimiter: str = ",") -> str:
    lines = [delimiter.join(format_number(v) for v in series.grid.points)]
    lines += [delimiter.join(format_number(v) for v in row) for row in series.values]
    return "\n".join(lines) + "\n"


def write_curves(series: CurveSeries, path, delimiter: str = ",") -> None:
    atomic_write_text(path, curves_to_text(series, delimiter))


def log_returns(prices: CurveSeries, midpoint: bool = False) -> CurveSeries:
    """Intraday log returns ``ln q(u_{i+1}) - ln q(u_i)`` for every curve.

    The result sits on the first ``m - 1`` grid points, or on the interval
    midpoints when ``midpoint`` is true.
    """
    m = len(prices.grid)
    if m < 4:
        raise InputError(f"log returns need at least 4 grid points, got {m}")
    bad = np.argwhere(prices.values <= 0)
    if bad.size:
        t, i = bad[0]
        raise InputError(
            f"nonpositive price {prices.values[t, i]} at curve {t + 1}, point {i + 1}"
        )
    pts = prices.grid.points
    grid = Grid((pts[:-1] + pts[1:]) / 2 if midpoint else pts[:-1])
    return CurveSeries(grid, np.diff(np.log(prices.values), axis=1), prices.label,
                       min_length=1)


def cpi_normalize(prices: CurveSeries, cpi: CurveSeries) -> CurveSeries:
    """Deflate prices pointwise: ``100 * price / cpi``."""
    if prices.values.shape != cpi.values.shape:
        raise InputError(
            f"price shape {prices.values.shape} does not match CPI shape {cpi.values.shape}"
        )
    if prices.grid != cpi.grid:
        raise InputError("price and CPI grids differ")
    bad = np.argwhere(cpi.values <= 0)
    if bad.size:
        t, i = bad[0]
        raise InputError(f"nonpositive CPI {cpi.values[t, i]} at curve {t + 1}, point {i + 1}")
    return CurveSeries(prices.grid, prices.values / cpi.values * 100.0, prices.label,
                       min_length=1)
