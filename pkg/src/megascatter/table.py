"""Columnar point dataset: CSV ingestion, column stats, and distributions.

A :class:`PointTable` is immutable after construction: x/y coordinate arrays
plus any number of typed auxiliary columns (real64 or categorical). Rows keep
their file order and are addressed by 0-based index everywhere else in the
package.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import BinaryIO, Union

import numpy as np

from .errors import (
    ColumnError,
    EmptyInputError,
    KindMismatchError,
    ParseError,
)


class ChannelKind(Enum):
    CATEGORICAL = "categorical"
    CONTINUOUS = "continuous"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class NumericColumn:
    """A real64 column; all values finite."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(np.asarray(self.values, dtype=np.float64)))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class CategoricalColumn:
    """Codes into a sorted, deduplicated label list; every code in range."""

    codes: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        codes = _freeze(np.asarray(self.codes, dtype=np.uint32))
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != len(set(self.labels)):
            raise ValueError("categorical labels must be unique")
        if list(self.labels) != sorted(self.labels):
            raise ValueError("categorical labels must be sorted")
        if len(codes) and (len(self.labels) == 0 or codes.max() >= len(self.labels)):
            raise ValueError("categorical code out of range")

    def __len__(self) -> int:
        return len(self.codes)


Column = Union[NumericColumn, CategoricalColumn]


@dataclass(frozen=True)
class ColumnStats:
    min: float
    max: float
    has_nonpositive: bool
    unique_count: int = 0


@dataclass(frozen=True)
class PointTable:
    """Immutable columnar dataset of 2D points.

    ``x``/``y`` are finite float64 arrays of equal length; ``columns`` maps
    names to typed columns of the same length.
    """

    x: np.ndarray
    y: np.ndarray
    columns: dict[str, Column] = field(default_factory=dict)

    def __post_init__(self):
        x = _freeze(np.asarray(self.x, dtype=np.float64))
        y = _freeze(np.asarray(self.y, dtype=np.float64))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
            raise ValueError("x and y must be 1-D arrays of equal length")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("x and y must be finite")
        for name, col in self.columns.items():
            if len(col) != len(x):
                raise ValueError(f"column {name!r} has {len(col)} rows, expected {len(x)}")

    @property
    def row_count(self) -> int:
        return len(self.x)

    def column(self, name: str) -> Column:
        try:
            return self.columns[name]
        except KeyError:
            raise ColumnError(name) from None

    def bounds(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) of the data, zeros when empty."""
        if self.row_count == 0:
            return (0.0, 0.0, 0.0, 0.0)
        return (
            float(self.x.min()),
            float(self.x.max()),
            float(self.y.min()),
            float(self.y.max()),
        )


def _tokenize_csv(data: bytes) -> tuple[list[str], np.ndarray]:
    """Split CSV bytes into (header, cells) where cells is an (n, k) str array.

    Fast path uses numpy's C tokenizer (quote-aware); on failure we rescan with
    the csv module purely to produce an error that names the offending row.
    """
    if not data.strip():
        raise EmptyInputError("input contains no data")
    text = data.decode("utf-8")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cells = np.loadtxt(
                io.StringIO(text),
                dtype=str,
                delimiter=",",
                quotechar='"',
                comments=None,
                ndmin=2,
            )
    except ValueError:
        _rescan_for_error(text)
        raise ParseError(0, "malformed CSV") from None
    if cells.size == 0:
        raise EmptyInputError("input contains no data")
    header = [str(v) for v in cells[0]]
    if len(set(header)) != len(header):
        dupe = next(h for h in header if header.count(h) > 1)
        raise ColumnError(dupe, f"duplicate column name: {dupe!r}")
    return header, cells[1:]


def _rescan_for_error(text: str):
    """Locate the first ragged row so the error can carry its number."""
    reader = csv.reader(io.StringIO(text))
    width = None
    row_no = 0
    for record in reader:
        if not record:
            continue  # blank line, not a data row
        if width is None:
            width = len(record)
        else:
            row_no += 1
            if len(record) != width:
                raise ParseError(
                    row_no, f"expected {width} fields, found {len(record)}"
                )


def _parse_coordinate(raw: np.ndarray, name: str) -> np.ndarray:
    try:
        values = raw.astype(np.float64)
    except ValueError:
        values = None
    if values is None:
        for i, token in enumerate(raw):
            try:
                float(token)
            except ValueError:
                raise ParseError(
                    i + 1, f"non-numeric value {str(token)!r} in column {name!r}"
                ) from None
        raise ParseError(0, f"could not parse column {name!r}")
    bad = ~np.isfinite(values)
    if bad.any():
        row = int(np.argmax(bad)) + 1
        raise ParseError(row, f"non-finite value in column {name!r}")
    return values


def _parse_auxiliary(raw: np.ndarray) -> Column:
    """Numeric when every token parses as a finite real; else categorical."""
    try:
        values = raw.astype(np.float64)
        if np.isfinite(values).all():
            return NumericColumn(values)
    except ValueError:
        pass
    labels, codes = np.unique(raw, return_inverse=True)
    return CategoricalColumn(codes.astype(np.uint32), tuple(str(s) for s in labels))


def ingest_csv(source: BinaryIO | bytes, x_column: str, y_column: str) -> PointTable:
    """Build a PointTable from UTF-8, comma-delimited CSV with a header row.

    ``x_column``/``y_column`` must name finite numeric columns; they become
    the coordinate arrays. Every other column is parsed as real64 when all
    its values are finite numbers and as categorical (sorted unique labels)
    otherwise. Empty fields are treated as missing values and rejected.
    """
    data = source if isinstance(source, bytes) else source.read()
    header, cells = _tokenize_csv(data)
    for wanted in (x_column, y_column):
        if wanted not in header:
            raise ColumnError(wanted)

    if cells.size:
        empties = cells == ""
        if empties.any():
            row = int(np.argmax(empties.any(axis=1))) + 1
            raise ParseError(row, "empty field (missing values are rejected)")

    by_name = {name: cells[:, j] for j, name in enumerate(header)}
    x = _parse_coordinate(by_name[x_column], x_column)
    y = _parse_coordinate(by_name[y_column], y_column)
    # Coordinate source columns stay addressable like any other column so
    # stats, histograms, and tooltips can refer to them by name.
    columns: dict[str, Column] = {}
    for name in header:
        if name == x_column:
            columns[name] = NumericColumn(x)
        elif name == y_column:
            columns[name] = NumericColumn(y)
        else:
            columns[name] = _parse_auxiliary(by_name[name])
    return PointTable(x=x, y=y, columns=columns)


def column_stats(table: PointTable, column: str) -> ColumnStats:
    """Min/max plus a nonpositive flag; unique_count for categoricals."""
    col = table.column(column)
    if isinstance(col, CategoricalColumn):
        if len(col) == 0:
            return ColumnStats(0.0, 0.0, False, unique_count=len(col.labels))
        return ColumnStats(
            float(col.codes.min()),
            float(col.codes.max()),
            bool((col.codes == 0).any()),
            unique_count=len(col.labels),
        )
    if len(col) == 0:
        return ColumnStats(0.0, 0.0, False)
    return ColumnStats(
        float(col.values.min()),
        float(col.values.max()),
        bool((col.values <= 0).any()),
    )


def infer_channel_kind(table: PointTable, column: str) -> ChannelKind:
    col = table.column(column)
    if isinstance(col, CategoricalColumn):
        return ChannelKind.CATEGORICAL
    return ChannelKind.CONTINUOUS


def histogram(table: PointTable, column: str, bin_count: int) -> list[int]:
    """Equal-width bin counts over [min, max] of a continuous column.

    Bin i covers [min + i*w, min + (i+1)*w) with the last bin right-closed;
    bins are assigned by floor((v - min) / w). When min == max (zero width)
    all values land in the last bin.
    """
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    col = table.column(column)
    if isinstance(col, CategoricalColumn):
        raise KindMismatchError(f"column {column!r} is categorical, expected continuous")
    values = col.values
    counts = [0] * bin_count
    if len(values) == 0:
        return counts
    lo = float(values.min())
    hi = float(values.max())
    width = (hi - lo) / bin_count
    if width <= 0 or not math.isfinite(width):
        counts[-1] = len(values)
        return counts
    idx = np.floor((values - lo) / width).astype(np.int64)
    np.clip(idx, 0, bin_count - 1, out=idx)
    binned = np.bincount(idx, minlength=bin_count)
    return [int(c) for c in binned]


def category_frequencies(table: PointTable, column: str) -> list[tuple[str, int]]:
    """Per-label counts for a categorical column, sorted by label."""
    col = table.column(column)
    if isinstance(col, NumericColumn):
        raise KindMismatchError(f"column {column!r} is continuous, expected categorical")
    counts = np.bincount(col.codes, minlength=len(col.labels))
    return [(label, int(n)) for label, n in zip(col.labels, counts)]
