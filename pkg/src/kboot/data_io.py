"""Delimited-table ingestion, mean imputation and tensor slicing.

The traffic workflow stores a (segments, days, windows) tensor as a table
with one column per segment and one row per (day, window) pair in
day-major order, so column means are per-segment means and the table
flattened row by row walks the tensor in (day, window, segment) order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .exceptions import ConfigError, ImputationError, ParseError, ShapeError

DEFAULT_MISSING = ("", "NA", "NaN")


@dataclass
class RawTable:
    """Rectangular table of floats; missing entries are NaN."""

    values: np.ndarray
    row_labels: list | None = None
    col_labels: list | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.values).sum())

    @property
    def missing_rate(self) -> float:
        return self.n_missing / self.values.size if self.values.size else 0.0


def _parse_cell(tok: str, missing: frozenset, lineno: int) -> float:
    t = tok.strip()
    if t in missing:
        return math.nan
    try:
        v = float(t)
    except ValueError:
        raise ParseError(f"line {lineno}: cannot parse {tok!r} as a number") from None
    if not math.isfinite(v):
        raise ParseError(f"line {lineno}: non-finite value {tok!r}")
    return v


def read_table(path, delimiter: str = ",", has_header: bool = False,
               missing_tokens=DEFAULT_MISSING, has_row_labels: bool = False) -> RawTable:
    """Read a delimited text file of numbers.

    Lines starting with ``#`` are skipped. Tokens in ``missing_tokens`` become
    NaN. Raises :class:`ParseError` (with the line number) for ragged rows or
    unparseable cells, and ``OSError`` if the file cannot be read.
    """
    missing = frozenset(missing_tokens)
    rows, row_labels, header = [], [], None
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, rec in enumerate(reader, start=1):
            if not rec or (rec[0].startswith("#")):
                continue
            if has_header and header is None:
                header = rec[1:] if has_row_labels else rec
                continue
            if has_row_labels:
                row_labels.append(rec[0])
                rec = rec[1:]
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise ParseError(f"line {lineno}: expected {width} fields, got {len(rec)}")
            rows.append([_parse_cell(t, missing, lineno) for t in rec])
    if not rows:
        raise ParseError(f"{path}: no data rows")
    if header is not None and len(header) != width:
        raise ParseError(f"header has {len(header)} fields, rows have {width}")
    return RawTable(np.array(rows, dtype=np.float64),
                    row_labels or None, list(header) if header is not None else None)


def format_number(v: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    if math.isnan(v):
        return ""
    return repr(float(v))


def write_table(path, values, delimiter: str = ",", header=None) -> None:
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in np.atleast_2d(values):
            w.writerow([format_number(v) for v in row])


def impute_mean(t: RawTable | np.ndarray, axis: Literal["column", "row"] = "column") -> np.ndarray:
    """Fill missing entries with the observed mean of their column or row.

    ``axis="column"`` averages each column (one segment over all days and
    windows in the traffic layout). Observed entries are untouched. A slice with no
    observed value raises :class:`ImputationError`. The CLI has no default
    for this choice; the ``test`` command requires ``--impute-axis``.
    """
    V = np.array(t.values if isinstance(t, RawTable) else t, dtype=np.float64)
    if axis not in ("column", "row"):
        raise ConfigError(f"axis must be 'column' or 'row', got {axis!r}")
    ax = 0 if axis == "column" else 1
    mask = np.isnan(V)
    if not mask.any():
        return V
    counts = (~mask).sum(axis=ax)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise ImputationError(f"{axis} {int(empty[0])} has no observed values")
    means = np.where(mask, 0.0, V).sum(axis=ax) / counts
    fill = means[None, :] if ax == 0 else means[:, None]
    V[mask] = np.broadcast_to(fill, V.shape)[mask]
    return V


@dataclass(frozen=True)
class TensorSpec:
    """Tensor axis sizes and the time-window indices (0-based) to extract.

    One window yields that window's (days, segments) matrix; two windows
    ``(a, b)`` yield the difference ``window b - window a``.
    """

    segments: int
    days: int
    windows: int
    slice: tuple = field(default=(0,))

    def __post_init__(self):
        if min(self.segments, self.days, self.windows) < 1:
            raise ShapeError("tensor axis sizes must be positive")
        sl = tuple(int(w) for w in self.slice)
        object.__setattr__(self, "slice", sl)
        if len(sl) not in (1, 2):
            raise ConfigError(f"slice must name one or two windows, got {sl}")
        if any(not 0 <= w < self.windows for w in sl):
            raise ShapeError(f"window indices {sl} out of range for {self.windows} windows")

    @property
    def size(self) -> int:
        return self.segments * self.days * self.windows


def slice_tensor(values, spec: TensorSpec) -> np.ndarray:
    """Reshape flat (day, window, segment) data and extract a days x segments matrix."""
    flat = np.asarray(values, dtype=np.float64).ravel()
    if flat.size != spec.size:
        raise ShapeError(f"data has {flat.size} entries but the tensor "
                         f"{spec.segments}x{spec.days}x{spec.windows} needs {spec.size}")
    T = flat.reshape(spec.days, spec.windows, spec.segments)
    if len(spec.slice) == 1:
        return np.ascontiguousarray(T[:, spec.slice[0], :])
    a, b = spec.slice
    return T[:, b, :] - T[:, a, :]


def synthetic_traffic(segments: int = 214, days: int = 61, windows: int = 2,
                      missing_rate: float = 0.0129, shift: float = 0.0,
                      seed: int = 0) -> RawTable:
    """Synthetic speed table shaped like the traffic data, with holes.

    Speeds are a per-segment level plus day-level noise; the last window is
    offset by ``shift`` in every segment. Exactly
    ``round(missing_rate * size)`` cells are blanked.
    """
    if not 0.0 <= missing_rate < 1.0:
        raise ConfigError(f"missing_rate must lie in [0, 1), got {missing_rate}")
    rng = np.random.default_rng(seed)
    level = rng.uniform(20.0, 60.0, size=segments)
    T = level[None, None, :] + 5.0 * rng.standard_normal((days, windows, segments))
    T[:, -1, :] += shift
    V = T.reshape(days * windows, segments)
    k = round(missing_rate * V.size)
    holes = rng.choice(V.size, size=k, replace=False)
    V.flat[holes] = np.nan
    rows = [f"d{d}_w{w}" for d in range(days) for w in range(windows)]
    return RawTable(V, rows, [f"seg{s}" for s in range(segments)])


def write_raw_table(path, t: RawTable, delimiter: str = ",") -> None:
    """Write a table with optional row/column labels; NaN cells are left blank."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        if t.col_labels is not None:
            w.writerow((["row"] if t.row_labels else []) + list(t.col_labels))
        for i, row in enumerate(t.values):
            cells = [format_number(v) for v in row]
            w.writerow(([t.row_labels[i]] if t.row_labels else []) + cells)
