"""Quadtree over point positions: extent queries, exact counts, nearest pick.

The tree is built once per table and stored as flat parallel arrays: node
bounds, subtree counts, child links, and a permutation of row indices in
which every node owns a contiguous slice. That layout makes "node fully
inside the query" contribute its whole slice without descent, which is what
keeps full-viewport density counts and queries cheap at millions of points.

Conventions:
  - Internal partitioning is half-open: a point belongs to the high child of
    an axis iff coord >= midpoint, so ownership is unique and the root's max
    edges are effectively closed.
  - Queries are closed on all edges: boundary points count as visible.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .table import PointTable

LEAF_CAPACITY = 64
MAX_DEPTH = 32

# Child k of a node: k & 1 selects the high x half, k & 2 the high y half.


@dataclass(frozen=True)
class Extent:
    """Axis-aligned data-space rectangle, finite, min <= max per axis."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("extent coordinates must be finite")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError("extent min must not exceed max")

    @property
    def x_span(self) -> float:
        return self.x_max - self.x_min

    @property
    def y_span(self) -> float:
        return self.y_max - self.y_min

    def contains_point(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def contains_extent(self, other: "Extent") -> bool:
        return (
            self.x_min <= other.x_min
            and other.x_max <= self.x_max
            and self.y_min <= other.y_min
            and other.y_max <= self.y_max
        )

    def intersects(self, other: "Extent") -> bool:
        return not (
            other.x_max < self.x_min
            or other.x_min > self.x_max
            or other.y_max < self.y_min
            or other.y_min > self.y_max
        )


class SpatialIndex:
    """Immutable quadtree; build with :func:`build_index`."""

    def __init__(
        self,
        bounds: np.ndarray,
        first_child: np.ndarray,
        start: np.ndarray,
        end: np.ndarray,
        perm: np.ndarray,
        px: np.ndarray,
        py: np.ndarray,
        leaf_capacity: int,
    ):
        self._bounds = bounds          # (n_nodes, 4): x0, x1, y0, y1
        self._first_child = first_child  # -1 for leaves
        self._start = start
        self._end = end
        self._perm = perm              # row indices, contiguous per node
        self._px = px                  # coordinates reordered by perm
        self._py = py
        self.leaf_capacity = leaf_capacity
        for arr in (bounds, first_child, start, end, perm, px, py):
            arr.flags.writeable = False

    @property
    def node_count(self) -> int:
        return len(self._first_child)

    @property
    def point_count(self) -> int:
        return len(self._perm)

    def node_extent(self, node: int) -> Extent:
        x0, x1, y0, y1 = self._bounds[node]
        return Extent(float(x0), float(x1), float(y0), float(y1))

    def node_children(self, node: int) -> tuple[int, int, int, int] | None:
        c = int(self._first_child[node])
        if c < 0:
            return None
        return (c, c + 1, c + 2, c + 3)

    def node_count_of(self, node: int) -> int:
        return int(self._end[node] - self._start[node])

    def node_rows(self, node: int) -> np.ndarray:
        return self._perm[self._start[node]:self._end[node]]


def build_index(table: PointTable, leaf_capacity: int = LEAF_CAPACITY) -> SpatialIndex:
    """Deterministic quadtree over the table's points.

    Subdivision stops at ``leaf_capacity`` points, at depth ``MAX_DEPTH``, or
    when a node's rectangle has collapsed to a single location; the latter two
    produce overflow leaves, which keeps coincident points from recursing
    forever.
    """
    if leaf_capacity < 1:
        raise ValueError("leaf_capacity must be >= 1")
    n = table.row_count
    perm = np.arange(n, dtype=np.int64)
    px = table.x.copy()
    py = table.y.copy()

    if n == 0:
        root = (0.0, 0.0, 0.0, 0.0)
    else:
        root = (float(px.min()), float(px.max()), float(py.min()), float(py.max()))

    bounds = [root]
    first_child = [-1]
    start = [0]
    end = [n]

    # Iterative subdivision; children of one node are allocated contiguously.
    stack = [(0, 0)]
    while stack:
        node, depth = stack.pop()
        s, e = start[node], end[node]
        count = e - s
        if count <= leaf_capacity or depth >= MAX_DEPTH:
            continue
        x0, x1, y0, y1 = bounds[node]
        if x0 == x1 and y0 == y1:
            continue  # all points coincident: overflow leaf
        xm = 0.5 * (x0 + x1)
        ym = 0.5 * (y0 + y1)

        sl = slice(s, e)
        quad = (py[sl] >= ym).astype(np.uint8)
        quad <<= 1
        quad |= px[sl] >= xm
        order = np.argsort(quad, kind="stable")
        perm[sl] = perm[sl][order]
        px[sl] = px[sl][order]
        py[sl] = py[sl][order]
        sizes = np.bincount(quad, minlength=4)

        child0 = len(bounds)
        first_child[node] = child0
        offset = s
        for k in range(4):
            cx0, cx1 = (x0, xm) if k & 1 == 0 else (xm, x1)
            cy0, cy1 = (y0, ym) if k & 2 == 0 else (ym, y1)
            bounds.append((cx0, cx1, cy0, cy1))
            first_child.append(-1)
            start.append(offset)
            offset += int(sizes[k])
            end.append(offset)
            stack.append((child0 + k, depth + 1))

    return SpatialIndex(
        bounds=np.asarray(bounds, dtype=np.float64).reshape(-1, 4),
        first_child=np.asarray(first_child, dtype=np.int64),
        start=np.asarray(start, dtype=np.int64),
        end=np.asarray(end, dtype=np.int64),
        perm=perm,
        px=px,
        py=py,
        leaf_capacity=leaf_capacity,
    )


def _classify(bounds_row: np.ndarray, e: Extent) -> int:
    """0 = disjoint, 1 = partial overlap, 2 = node fully inside query."""
    x0, x1, y0, y1 = bounds_row
    if x1 < e.x_min or x0 > e.x_max or y1 < e.y_min or y0 > e.y_max:
        return 0
    if x0 >= e.x_min and x1 <= e.x_max and y0 >= e.y_min and y1 <= e.y_max:
        return 2
    return 1


def query_extent(index: SpatialIndex, e: Extent) -> np.ndarray:
    """Row indices of all points inside ``e`` (closed), sorted ascending."""
    if index.point_count == 0:
        return np.empty(0, dtype=np.int64)
    pieces: list[np.ndarray] = []
    stack = [0]
    bounds = index._bounds
    first_child = index._first_child
    start, end = index._start, index._end
    perm, px, py = index._perm, index._px, index._py
    while stack:
        node = stack.pop()
        if start[node] == end[node]:
            continue
        kind = _classify(bounds[node], e)
        if kind == 0:
            continue
        if kind == 2:
            pieces.append(perm[start[node]:end[node]])
            continue
        child = first_child[node]
        if child >= 0:
            stack.extend((child, child + 1, child + 2, child + 3))
        else:
            sl = slice(start[node], end[node])
            sx, sy = px[sl], py[sl]
            mask = (sx >= e.x_min) & (sx <= e.x_max) & (sy >= e.y_min) & (sy <= e.y_max)
            if mask.any():
                pieces.append(perm[sl][mask])
    if not pieces:
        return np.empty(0, dtype=np.int64)
    out = np.concatenate(pieces)
    out.sort()
    return out


def count_extent(index: SpatialIndex, e: Extent) -> int:
    """Exact |query_extent(e)| using subtree-count shortcuts."""
    if index.point_count == 0:
        return 0
    total = 0
    stack = [0]
    bounds = index._bounds
    first_child = index._first_child
    start, end = index._start, index._end
    px, py = index._px, index._py
    while stack:
        node = stack.pop()
        if start[node] == end[node]:
            continue
        kind = _classify(bounds[node], e)
        if kind == 0:
            continue
        if kind == 2:
            total += int(end[node] - start[node])
            continue
        child = first_child[node]
        if child >= 0:
            stack.extend((child, child + 1, child + 2, child + 3))
        else:
            sl = slice(start[node], end[node])
            sx, sy = px[sl], py[sl]
            mask = (sx >= e.x_min) & (sx <= e.x_max) & (sy >= e.y_min) & (sy <= e.y_max)
            total += int(mask.sum())
    return total


def _rect_dist2(bounds_row: np.ndarray, x: float, y: float) -> float:
    x0, x1, y0, y1 = bounds_row
    dx = x0 - x if x < x0 else (x - x1 if x > x1 else 0.0)
    dy = y0 - y if y < y0 else (y - y1 if y > y1 else 0.0)
    return dx * dx + dy * dy


def pick_nearest(index: SpatialIndex, x: float, y: float, max_dist: float) -> int | None:
    """Euclidean-nearest row within ``max_dist``; ties go to the lowest row."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("probe point must be finite")
    if not max_dist > 0:
        raise ValueError("max_dist must be positive")
    if index.point_count == 0:
        return None

    best_d2 = max_dist * max_dist
    best_row: int | None = None
    bounds = index._bounds
    first_child = index._first_child
    start, end = index._start, index._end
    perm, px, py = index._perm, index._px, index._py

    heap: list[tuple[float, int]] = [(_rect_dist2(bounds[0], x, y), 0)]
    while heap:
        d2, node = heapq.heappop(heap)
        if d2 > best_d2:
            break
        if start[node] == end[node]:
            continue
        child = first_child[node]
        if child >= 0:
            for c in (child, child + 1, child + 2, child + 3):
                cd2 = _rect_dist2(bounds[c], x, y)
                if cd2 <= best_d2:
                    heapq.heappush(heap, (cd2, c))
            continue
        sl = slice(start[node], end[node])
        dx = px[sl] - x
        dy = py[sl] - y
        dist2 = dx * dx + dy * dy
        local_best = float(dist2.min())
        if local_best > best_d2:
            continue
        rows = perm[sl][dist2 == local_best]
        candidate = int(rows.min())
        if best_row is None or local_best < best_d2:
            best_d2 = local_best
            best_row = candidate
        elif candidate < best_row:  # equal distance: lowest row wins
            best_row = candidate
    return best_row
