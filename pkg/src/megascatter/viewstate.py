"""Cameras, density-adaptive opacity, zoom-to-selection, linked-view sync.

A :class:`ComposeGroup` holds the per-view cameras, selections, and hover
state for a set of linked views plus the sync flags that tie them together.
:func:`apply_event` is pure: it returns a new group and the list of per-view
state deltas that should be broadcast, so a single writer can serialize
events while readers keep consistent snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptySelectionError, MembershipError
from .quadtree import Extent
from .selection import SelectionSet
from .table import PointTable

MIN_ALPHA = 1.0 / 255.0  # smallest nonzero 8-bit alpha
DEFAULT_ZOOM_PADDING = 0.1


@dataclass(frozen=True)
class Camera:
    """Data-space field of view; both spans strictly positive."""

    extent: Extent

    def __post_init__(self):
        if not (self.extent.x_span > 0 and self.extent.y_span > 0):
            raise ValueError("camera extent must have positive spans")


@dataclass(frozen=True)
class ViewportPx:
    width_px: int
    height_px: int

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError("viewport dimensions must be >= 1")

    @property
    def aspect(self) -> float:
        return self.width_px / self.height_px


def dynamic_opacity(visible_count: int, point_size_px: float, vp: ViewportPx) -> float:
    """Alpha from the overdraw factor rho = count * size^2 / viewport area.

    Fully opaque while rho <= 1, then 1/rho floored at the smallest nonzero
    8-bit alpha; continuous at rho = 1. Fewer visible points (zooming into a
    sparse area) can only raise the result.
    """
    if visible_count < 0:
        raise ValueError("visible_count must be non-negative")
    if not point_size_px > 0:
        raise ValueError("point_size_px must be positive")
    rho = visible_count * point_size_px * point_size_px / (vp.width_px * vp.height_px)
    if rho <= 1.0:
        return 1.0
    return max(MIN_ALPHA, 1.0 / rho)


def _widen_degenerate(lo: float, hi: float, data_span: float) -> tuple[float, float]:
    # Zero-span axis: use 10% of the full-data span, or 1.0 if that is
    # also zero, centered on the collapsed value.
    if hi > lo:
        return lo, hi
    half = (0.1 * data_span if data_span > 0 else 1.0) / 2.0
    return lo - half, hi + half


def _aspect_fit(x_lo, x_hi, y_lo, y_hi, vp: ViewportPx) -> Extent:
    # Expand the shorter data axis symmetrically until extent aspect
    # matches the viewport aspect.
    sx = x_hi - x_lo
    sy = y_hi - y_lo
    target = vp.aspect
    if sx / sy < target:
        new_sx = sy * target
        cx = 0.5 * (x_lo + x_hi)
        x_lo, x_hi = cx - new_sx / 2.0, cx + new_sx / 2.0
    elif sx / sy > target:
        new_sy = sx / target
        cy = 0.5 * (y_lo + y_hi)
        y_lo, y_hi = cy - new_sy / 2.0, cy + new_sy / 2.0
    return Extent(x_lo, x_hi, y_lo, y_hi)


def _fit_bbox(
    x_lo, x_hi, y_lo, y_hi,
    data_x_span: float, data_y_span: float,
    vp: ViewportPx, padding: float,
) -> Camera:
    x_lo, x_hi = _widen_degenerate(x_lo, x_hi, data_x_span)
    y_lo, y_hi = _widen_degenerate(y_lo, y_hi, data_y_span)
    pad_x = padding * (x_hi - x_lo)
    pad_y = padding * (y_hi - y_lo)
    return Camera(_aspect_fit(x_lo - pad_x, x_hi + pad_x, y_lo - pad_y, y_hi + pad_y, vp))


def fit_camera_to_points(
    table: PointTable,
    sel: SelectionSet,
    vp: ViewportPx,
    padding: float = DEFAULT_ZOOM_PADDING,
) -> Camera:
    """Smallest viewport-aspect camera containing every selected point.

    Degenerate spans are widened first, then each side is padded by
    ``padding`` times the pre-aspect span, then the shorter axis is expanded
    symmetrically to match the viewport aspect.
    """
    if padding < 0:
        raise ValueError("padding must be >= 0")
    if len(sel) == 0:
        raise EmptySelectionError("cannot fit a camera to an empty selection")
    xs = table.x[sel.indices]
    ys = table.y[sel.indices]
    bx0, bx1, by0, by1 = table.bounds()
    return _fit_bbox(
        float(xs.min()), float(xs.max()), float(ys.min()), float(ys.max()),
        bx1 - bx0, by1 - by0, vp, padding,
    )


def default_camera(table: PointTable, vp: ViewportPx, padding: float = 0.0) -> Camera:
    """Camera framing the whole dataset (unit square when the table is empty)."""
    if table.row_count == 0:
        return Camera(_aspect_fit(0.0, 1.0, 0.0, 1.0, vp))
    x0, x1, y0, y1 = table.bounds()
    return _fit_bbox(x0, x1, y0, y1, x1 - x0, y1 - y0, vp, padding)


_UNSET = object()


@dataclass(frozen=True)
class ViewState:
    camera: Camera
    selection: SelectionSet
    hovered: int | None
    viewport: ViewportPx


@dataclass(frozen=True)
class ViewEvent:
    """One state change originating from a single view."""

    origin: str
    selection: SelectionSet | None = None
    camera: Camera | None = None
    hovered: object = _UNSET

    def __post_init__(self):
        set_count = (
            (self.selection is not None)
            + (self.camera is not None)
            + (self.hovered is not _UNSET)
        )
        if set_count != 1:
            raise ValueError("an event carries exactly one of selection/camera/hover")

    @classmethod
    def select(cls, origin: str, sel: SelectionSet) -> "ViewEvent":
        return cls(origin=origin, selection=sel)

    @classmethod
    def move_camera(cls, origin: str, cam: Camera) -> "ViewEvent":
        return cls(origin=origin, camera=cam)

    @classmethod
    def hover(cls, origin: str, row: int | None) -> "ViewEvent":
        return cls(origin=origin, hovered=row)


@dataclass(frozen=True)
class StateDelta:
    """What changed for one view; ``hover_changed`` disambiguates hover=None."""

    selection: SelectionSet | None = None
    camera: Camera | None = None
    hovered: int | None = None
    hover_changed: bool = False


@dataclass(frozen=True)
class ComposeGroup:
    """Linked views over one dataset plus their synchronization flags."""

    table: PointTable
    views: dict[str, ViewState]
    sync_selection: bool = False
    sync_hover: bool = False
    sync_view: bool = False
    zoom_on_selection: bool = False
    zoom_padding: float = DEFAULT_ZOOM_PADDING

    def __post_init__(self):
        if not self.views:
            raise ValueError("a compose group needs at least one view")

    @classmethod
    def create(
        cls,
        table: PointTable,
        view_ids: list[str],
        viewport: ViewportPx = ViewportPx(640, 480),
        **flags,
    ) -> "ComposeGroup":
        if len(set(view_ids)) != len(view_ids):
            raise ValueError("view ids must be unique")
        cam = default_camera(table, viewport)
        views = {
            vid: ViewState(camera=cam, selection=SelectionSet.empty(), hovered=None, viewport=viewport)
            for vid in view_ids
        }
        return cls(table=table, views=views, **flags)

    def view(self, view_id: str) -> ViewState:
        try:
            return self.views[view_id]
        except KeyError:
            raise MembershipError(view_id) from None


def apply_event(group: ComposeGroup, ev: ViewEvent) -> tuple[ComposeGroup, list[tuple[str, StateDelta]]]:
    """Apply one event and report the per-view deltas to broadcast.

    With the relevant sync flag off only the origin view changes and nothing
    is broadcast. With it on, the new state is copied to every view and each
    non-origin view appears in the broadcast list; zoom-on-selection
    additionally refits cameras (all views when selections are synced) and
    those camera changes are broadcast for every affected view, origin
    included, since the origin cannot compute them itself.
    """
    group.view(ev.origin)  # membership check
    views = dict(group.views)
    deltas: list[tuple[str, StateDelta]] = []

    if ev.selection is not None:
        targets = list(views) if group.sync_selection else [ev.origin]
        for vid in targets:
            views[vid] = replace(views[vid], selection=ev.selection)
        refit: dict[str, Camera] = {}
        if group.zoom_on_selection and len(ev.selection) > 0:
            if group.sync_view:
                # Cameras are synced: one fit (origin's viewport) for all
                # views, or camera equality would break.
                cam = fit_camera_to_points(
                    group.table, ev.selection, views[ev.origin].viewport, group.zoom_padding
                )
                refit = {vid: cam for vid in views}
            else:
                refit = {
                    vid: fit_camera_to_points(
                        group.table, ev.selection, views[vid].viewport, group.zoom_padding
                    )
                    for vid in targets
                }
            for vid, cam in refit.items():
                views[vid] = replace(views[vid], camera=cam)
        # With every relevant flag off only the origin changed and nothing is
        # broadcast; the origin learns its own refit camera out of band.
        broadcast_cameras = bool(refit) and (group.sync_selection or group.sync_view)
        for vid in views:
            sel = ev.selection if group.sync_selection and vid != ev.origin else None
            cam = refit.get(vid) if broadcast_cameras else None
            if sel is not None or cam is not None:
                deltas.append((vid, StateDelta(selection=sel, camera=cam)))

    elif ev.camera is not None:
        targets = list(views) if group.sync_view else [ev.origin]
        for vid in targets:
            views[vid] = replace(views[vid], camera=ev.camera)
        if group.sync_view:
            deltas = [(vid, StateDelta(camera=ev.camera)) for vid in views if vid != ev.origin]

    else:
        row = None if ev.hovered is _UNSET else ev.hovered
        targets = list(views) if group.sync_hover else [ev.origin]
        for vid in targets:
            views[vid] = replace(views[vid], hovered=row)
        if group.sync_hover:
            deltas = [
                (vid, StateDelta(hovered=row, hover_changed=True))
                for vid in views
                if vid != ev.origin
            ]

    return replace(group, views=views), deltas
