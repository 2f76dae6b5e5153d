"""Point selections: lasso (polygon), explicit index lists, set algebra."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidPolygonError, SelectionRangeError
from .quadtree import Extent, SpatialIndex, query_extent
from .table import PointTable


@dataclass(frozen=True)
class SelectionSet:
    """Strictly increasing, deduplicated row indices."""

    indices: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.indices, dtype=np.int64)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "indices", arr)
        if arr.ndim != 1:
            raise ValueError("selection indices must be 1-D")
        if len(arr) and (np.diff(arr) <= 0).any():
            raise ValueError("selection indices must be strictly increasing")
        if len(arr) and arr[0] < 0:
            raise ValueError("selection indices must be non-negative")

    @classmethod
    def empty(cls) -> "SelectionSet":
        return cls(np.empty(0, dtype=np.int64))

    @classmethod
    def from_unsorted(cls, indices: Iterable[int]) -> "SelectionSet":
        return cls(np.unique(np.asarray(list(indices), dtype=np.int64)))

    def __len__(self) -> int:
        return len(self.indices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SelectionSet):
            return NotImplemented
        return np.array_equal(self.indices, other.indices)

    def __hash__(self):
        return hash(self.indices.tobytes())


class CombineMode(Enum):
    UNION = "union"
    INTERSECTION = "intersection"
    DIFFERENCE = "difference"


@dataclass(frozen=True)
class LassoPolygon:
    """Closed polygon in data space; >= 3 finite vertices, last joins first."""

    vertices: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.vertices, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
            raise InvalidPolygonError("a lasso needs at least 3 (x, y) vertices")
        if not np.isfinite(arr).all():
            raise InvalidPolygonError("lasso vertices must be finite")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "vertices", arr)

    def bounding_extent(self) -> Extent:
        xs = self.vertices[:, 0]
        ys = self.vertices[:, 1]
        return Extent(float(xs.min()), float(xs.max()), float(ys.min()), float(ys.max()))


def points_in_polygon(xs: np.ndarray, ys: np.ndarray, poly: LassoPolygon) -> np.ndarray:
    """Even-odd (ray casting) containment for arrays of points.

    A rightward horizontal ray from each point is tested against every edge
    [v_i, v_j) using the half-open rule (yi > y) != (yj > y), so each crossing
    is counted exactly once. Points exactly on an edge get the convention's
    deterministic answer, which callers should not rely on.
    """
    inside = np.zeros(len(xs), dtype=bool)
    verts = poly.vertices
    k = len(verts)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(k):
            xi, yi = verts[i]
            xj, yj = verts[(i + 1) % k]
            straddles = (yi > ys) != (yj > ys)
            # x of the edge at height y; lanes where straddles is False may
            # produce inf/nan here and are masked out below.
            x_at = (xj - xi) * (ys - yi) / (yj - yi) + xi
            inside ^= straddles & (xs < x_at)
    return inside


def lasso_select(index: SpatialIndex, table: PointTable, poly: LassoPolygon) -> SelectionSet:
    """Rows strictly inside the polygon under the even-odd rule.

    Candidates come from an extent query over the polygon's bounding box, so
    the exact test only touches points that could possibly be inside.
    """
    if table.row_count == 0:
        return SelectionSet.empty()
    candidates = query_extent(index, poly.bounding_extent())
    if len(candidates) == 0:
        return SelectionSet.empty()
    xs = table.x[candidates]
    ys = table.y[candidates]
    hit = points_in_polygon(xs, ys, poly)
    return SelectionSet(candidates[hit])


def query_select(table: PointTable, raw_indices: Sequence[int]) -> SelectionSet:
    """Sorted, deduplicated selection; rejects the first out-of-range input."""
    n = table.row_count
    for value in raw_indices:
        iv = int(value)
        if iv < 0 or iv >= n:
            raise SelectionRangeError(iv, n)
    return SelectionSet.from_unsorted(int(v) for v in raw_indices)


def combine(a: SelectionSet, b: SelectionSet, mode: CombineMode) -> SelectionSet:
    if mode is CombineMode.UNION:
        return SelectionSet(np.union1d(a.indices, b.indices))
    if mode is CombineMode.INTERSECTION:
        return SelectionSet(np.intersect1d(a.indices, b.indices))
    if mode is CombineMode.DIFFERENCE:
        return SelectionSet(np.setdiff1d(a.indices, b.indices))
    raise ValueError(f"unknown combine mode: {mode!r}")
