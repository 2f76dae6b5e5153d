"""Headless software rasterizer: deterministic PNG-ready RGBA buffers.

Points are drawn in ascending row order as axis-aligned filled squares with
no anti-aliasing, composited source-over in premultiplied float arithmetic
and quantized once (round half up) at the end. The same inputs always yield
the same bytes, which is what makes golden-image tests trustworthy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoding import (
    Channel,
    EncodingSpec,
    RGBA,
    resolve_colors,
    resolve_sizes,
)
from .quadtree import SpatialIndex, count_extent, query_extent
from .table import CategoricalColumn, PointTable
from .viewstate import Camera, ViewportPx, dynamic_opacity

DEFAULT_POINT_COLOR: RGBA = (255, 255, 255, 255)
DEFAULT_POINT_SIZE = 4.0
BLACK: RGBA = (0, 0, 0, 255)


@dataclass(frozen=True)
class RenderEncodings:
    """Per-channel encodings used by one rendering; all optional."""

    color: EncodingSpec | None = None
    size: EncodingSpec | None = None
    opacity: EncodingSpec | None = None

    def constant_opacity(self) -> float:
        if self.opacity is not None and self.opacity.constant is not None:
            return float(self.opacity.constant)
        return 1.0

    def representative_size(self) -> float:
        """Size used for the overdraw estimate when sizes vary per point."""
        if self.size is None:
            return DEFAULT_POINT_SIZE
        if self.size.constant is not None:
            return float(self.size.constant)
        smap = self.size.size_map
        return 0.5 * (smap.min_px + smap.max_px)


def _column_values(table: PointTable, name: str) -> np.ndarray:
    col = table.column(name)
    if isinstance(col, CategoricalColumn):
        return col.codes
    return col.values


def _point_colors(table: PointTable, rows: np.ndarray, enc: RenderEncodings) -> np.ndarray:
    n = len(rows)
    if enc.color is None or enc.color.constant is not None:
        constant = DEFAULT_POINT_COLOR if enc.color is None else enc.color.constant
        return np.tile(np.asarray(constant, dtype=np.uint8), (n, 1))
    values = _column_values(table, enc.color.source)[rows]
    return resolve_colors(enc.color, values)


def _point_sizes(table: PointTable, rows: np.ndarray, enc: RenderEncodings) -> np.ndarray:
    n = len(rows)
    if enc.size is None:
        return np.full(n, DEFAULT_POINT_SIZE)
    if enc.size.constant is not None:
        return np.full(n, float(enc.size.constant))
    values = _column_values(table, enc.size.source)[rows]
    return resolve_sizes(enc.size, values)


def render_image(
    table: PointTable,
    index: SpatialIndex,
    cam: Camera,
    vp: ViewportPx,
    encodings: RenderEncodings = RenderEncodings(),
    background: RGBA = BLACK,
) -> np.ndarray:
    """Render to an (H, W, 4) uint8 buffer.

    The camera extent maps linearly onto the viewport with y inverted
    (extent y_max is pixel row 0). A point covers the pixels whose centers
    fall inside its square footprint. Per-point alpha is the constant
    opacity times the density-adaptive opacity for the current view.
    """
    width, height = vp.width_px, vp.height_px
    bg = np.asarray(background, dtype=np.float64) / 255.0
    # Premultiplied float buffer.
    buf = np.empty((height, width, 4), dtype=np.float64)
    buf[:, :, 0] = bg[0] * bg[3]
    buf[:, :, 1] = bg[1] * bg[3]
    buf[:, :, 2] = bg[2] * bg[3]
    buf[:, :, 3] = bg[3]

    e = cam.extent
    rows = query_extent(index, e)  # ascending row order = draw order
    if len(rows):
        visible = count_extent(index, e)
        const_alpha = encodings.constant_opacity()
        colors = _point_colors(table, rows, encodings).astype(np.float64) / 255.0
        sizes = _point_sizes(table, rows, encodings)
        unique_sizes = np.unique(sizes)
        density = np.array([dynamic_opacity(visible, float(s), vp) for s in unique_sizes])
        alphas = colors[:, 3] * const_alpha * density[np.searchsorted(unique_sizes, sizes)]

        xs = (table.x[rows] - e.x_min) * (width / e.x_span)
        ys = (e.y_max - table.y[rows]) * (height / e.y_span)
        half = sizes / 2.0
        # Covered pixels are those whose centers (i + 0.5) lie inside the
        # square [center - half, center + half).
        x0 = np.ceil(xs - half - 0.5).astype(np.int64)
        x1 = np.ceil(xs + half - 0.5).astype(np.int64)
        y0 = np.ceil(ys - half - 0.5).astype(np.int64)
        y1 = np.ceil(ys + half - 0.5).astype(np.int64)
        np.clip(x0, 0, width, out=x0)
        np.clip(x1, 0, width, out=x1)
        np.clip(y0, 0, height, out=y0)
        np.clip(y1, 0, height, out=y1)

        for i in range(len(rows)):
            a = alphas[i]
            if a <= 0 or x0[i] >= x1[i] or y0[i] >= y1[i]:
                continue
            src = colors[i, :3] * a
            patch = buf[y0[i]:y1[i], x0[i]:x1[i], :]
            patch *= 1.0 - a
            patch[:, :, 0] += src[0]
            patch[:, :, 1] += src[1]
            patch[:, :, 2] += src[2]
            patch[:, :, 3] += a

    return quantize(buf)


def quantize(premultiplied: np.ndarray) -> np.ndarray:
    """Unpremultiply and quantize to uint8 with round half up."""
    out_a = premultiplied[:, :, 3]
    rgb = premultiplied[:, :, :3].copy()
    safe = out_a > 0
    rgb[safe] /= out_a[safe, None]
    stacked = np.concatenate([rgb, out_a[:, :, None]], axis=2)
    return np.floor(np.clip(stacked, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
