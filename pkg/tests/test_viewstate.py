import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from megascatter import (
    Camera,
    ComposeGroup,
    Extent,
    PointTable,
    SelectionSet,
    ViewEvent,
    ViewportPx,
    apply_event,
    dynamic_opacity,
    fit_camera_to_points,
    query_select,
)
from megascatter.errors import EmptySelectionError, MembershipError
from megascatter.viewstate import MIN_ALPHA, default_camera
from conftest import random_table

VP = ViewportPx(400, 400)


class TestDynamicOpacity:
    def test_zero_visible_fully_opaque(self):
        assert dynamic_opacity(0, 4.0, VP) == 1.0

    def test_sparse_view_fully_opaque(self):
        # rho = 100 * 16 / 160000 = 0.01
        assert dynamic_opacity(100, 4.0, VP) == 1.0

    def test_dense_view_inverse_overdraw(self):
        # rho = 1e6 * 16 / 160000 = 100
        assert dynamic_opacity(1_000_000, 4.0, VP) == pytest.approx(0.01, abs=1e-12)

    def test_floor_at_smallest_nonzero_alpha(self):
        assert dynamic_opacity(10**12, 10.0, VP) == MIN_ALPHA

    def test_continuous_at_rho_one(self):
        # exactly rho = 1: 10000 points of size 4 on a 400x400 viewport
        assert dynamic_opacity(10_000, 4.0, VP) == 1.0
        assert dynamic_opacity(10_001, 4.0, VP) == pytest.approx(1.0, rel=1e-3)

    @given(st.lists(st.integers(0, 10**8), min_size=2, max_size=50),
           st.floats(0.5, 32.0))
    @settings(max_examples=100)
    def test_non_increasing_in_visible_count(self, counts, size):
        counts = sorted(counts)
        alphas = [dynamic_opacity(c, size, VP) for c in counts]
        assert all(a >= b for a, b in zip(alphas, alphas[1:]))
        assert all(a >= MIN_ALPHA for a in alphas)

    def test_opaque_iff_rho_at_most_one(self):
        for count in (0, 1, 9_999, 10_000):
            assert dynamic_opacity(count, 4.0, VP) == 1.0
        for count in (10_001, 20_000, 10**7):
            assert dynamic_opacity(count, 4.0, VP) < 1.0


class TestFitCamera:
    def test_single_point_centered(self):
        table = PointTable(x=[3.0], y=[4.0])
        cam = fit_camera_to_points(table, query_select(table, [0]), VP, padding=0.1)
        e = cam.extent
        assert (e.x_min + e.x_max) / 2 == pytest.approx(3.0)
        assert (e.y_min + e.y_max) / 2 == pytest.approx(4.0)
        assert e.x_span > 0 and e.y_span > 0

    def test_square_bbox_padding(self):
        table = PointTable(x=[0.0, 10.0], y=[0.0, 10.0])
        cam = fit_camera_to_points(table, query_select(table, [0, 1]), VP, padding=0.1)
        e = cam.extent
        assert (e.x_min, e.x_max, e.y_min, e.y_max) == pytest.approx((-1.0, 11.0, -1.0, 11.0))

    def test_aspect_expansion_of_short_axis(self):
        table = PointTable(x=[0.0, 10.0], y=[0.0, 5.0])
        cam = fit_camera_to_points(table, query_select(table, [0, 1]), VP, padding=0.0)
        e = cam.extent
        assert (e.x_min, e.x_max) == pytest.approx((0.0, 10.0))
        assert (e.y_min, e.y_max) == pytest.approx((-2.5, 7.5))

    def test_empty_selection_rejected(self):
        table = PointTable(x=[0.0], y=[0.0])
        with pytest.raises(EmptySelectionError):
            fit_camera_to_points(table, SelectionSet.empty(), VP)

    def test_degenerate_axis_widened_by_data_fraction(self):
        # selected points share y; data y-span is 10 -> widened span = 1.
        table = PointTable(x=[0.0, 4.0, 0.0], y=[2.0, 2.0, 12.0])
        cam = fit_camera_to_points(table, query_select(table, [0, 1]), VP, padding=0.0)
        e = cam.extent
        assert e.y_span == pytest.approx(4.0)  # aspect-expanded from the 1.0 fix-up
        assert e.y_min < 2.0 < e.y_max

    @given(st.integers(2, 60), st.integers(0, 2**31), st.floats(0, 0.5),
           st.integers(50, 900), st.integers(50, 900))
    @settings(max_examples=100, deadline=None)
    def test_contains_selection_and_matches_aspect(self, n, seed, padding, w, h):
        table = random_table(n, seed=seed)
        rng = np.random.default_rng(seed + 1)
        pick = sorted(set(rng.integers(0, n, max(1, n // 3)).tolist()))
        sel = query_select(table, pick)
        vp = ViewportPx(w, h)
        cam = fit_camera_to_points(table, sel, vp, padding=padding)
        e = cam.extent
        assert (table.x[sel.indices] >= e.x_min).all()
        assert (table.x[sel.indices] <= e.x_max).all()
        assert (table.y[sel.indices] >= e.y_min).all()
        assert (table.y[sel.indices] <= e.y_max).all()
        assert abs(e.x_span / e.y_span - vp.aspect) <= 1e-9 * vp.aspect


def make_group(n_views=2, n_points=50, seed=0, **flags) -> ComposeGroup:
    table = random_table(n_points, seed=seed)
    return ComposeGroup.create(table, [f"v{i}" for i in range(n_views)], **flags)


class TestApplyEvent:
    def test_sync_selection_copies_and_broadcasts(self):
        group = make_group(2, sync_selection=True)
        sel = query_select(group.table, [1, 2, 3])
        new, deltas = apply_event(group, ViewEvent.select("v0", sel))
        assert new.views["v0"].selection == sel
        assert new.views["v1"].selection == sel
        assert [vid for vid, _ in deltas] == ["v1"]
        assert deltas[0][1].selection == sel

    def test_sync_off_changes_only_origin_empty_broadcast(self):
        group = make_group(2, sync_view=False)
        cam = Camera(Extent(0, 1, 0, 1))
        new, deltas = apply_event(group, ViewEvent.move_camera("v0", cam))
        assert new.views["v0"].camera == cam
        assert new.views["v1"].camera == group.views["v1"].camera
        assert deltas == []

    def test_camera_sync_broadcasts_to_others(self):
        group = make_group(3, sync_view=True)
        cam = Camera(Extent(0, 2, 0, 2))
        new, deltas = apply_event(group, ViewEvent.move_camera("v1", cam))
        assert all(new.views[v].camera == cam for v in new.views)
        assert sorted(vid for vid, _ in deltas) == ["v0", "v2"]

    def test_hover_sync(self):
        group = make_group(2, sync_hover=True)
        new, deltas = apply_event(group, ViewEvent.hover("v0", 7))
        assert new.views["v0"].hovered == 7
        assert new.views["v1"].hovered == 7
        assert deltas == [("v1", deltas[0][1])]
        assert deltas[0][1].hover_changed and deltas[0][1].hovered == 7
        # unhover propagates as well
        new2, deltas2 = apply_event(new, ViewEvent.hover("v1", None))
        assert new2.views["v0"].hovered is None
        assert deltas2[0][1].hovered is None and deltas2[0][1].hover_changed

    def test_zoom_on_selection_refits_all_views(self):
        group = make_group(4, sync_selection=True, zoom_on_selection=True)
        sel = query_select(group.table, [0, 5, 9])
        new, deltas = apply_event(group, ViewEvent.select("v2", sel))
        fitted = {vid for vid, d in deltas if d.camera is not None}
        assert fitted == {"v0", "v1", "v2", "v3"}
        xs = group.table.x[sel.indices]
        ys = group.table.y[sel.indices]
        for state in new.views.values():
            e = state.camera.extent
            assert (xs >= e.x_min).all() and (xs <= e.x_max).all()
            assert (ys >= e.y_min).all() and (ys <= e.y_max).all()

    def test_zoom_with_empty_selection_keeps_cameras(self):
        group = make_group(2, sync_selection=True, zoom_on_selection=True)
        before = {vid: s.camera for vid, s in group.views.items()}
        new, deltas = apply_event(group, ViewEvent.select("v0", SelectionSet.empty()))
        assert {vid: s.camera for vid, s in new.views.items()} == before
        assert all(d.camera is None for _, d in deltas)

    def test_idempotent_selection(self):
        group = make_group(3, sync_selection=True, zoom_on_selection=True)
        sel = query_select(group.table, [2, 4])
        ev = ViewEvent.select("v0", sel)
        once, _ = apply_event(group, ev)
        twice, _ = apply_event(once, ev)
        assert once == twice

    def test_unknown_origin(self):
        group = make_group(2)
        with pytest.raises(MembershipError):
            apply_event(group, ViewEvent.hover("nope", 1))

    def test_event_requires_exactly_one_kind(self):
        with pytest.raises(ValueError):
            ViewEvent(origin="v0")


def _check_sync_invariants(group: ComposeGroup):
    states = list(group.views.values())
    if group.sync_selection:
        assert all(s.selection == states[0].selection for s in states)
    if group.sync_view:
        assert all(s.camera == states[0].camera for s in states)
    if group.sync_hover:
        assert all(s.hovered == states[0].hovered for s in states)


@given(st.integers(0, 2**31), st.booleans(), st.booleans(), st.booleans(), st.booleans())
@settings(max_examples=40, deadline=None)
def test_random_event_sequences_preserve_invariants(seed, sync_sel, sync_hov, sync_view, zoom):
    rng = np.random.default_rng(seed)
    group = make_group(
        4, n_points=30, seed=seed,
        sync_selection=sync_sel, sync_hover=sync_hov,
        sync_view=sync_view, zoom_on_selection=zoom,
    )
    view_ids = list(group.views)
    for _ in range(60):
        origin = view_ids[rng.integers(0, len(view_ids))]
        kind = rng.integers(0, 3)
        if kind == 0:
            count = int(rng.integers(0, 10))
            sel = query_select(group.table, rng.integers(0, 30, count).tolist())
            ev = ViewEvent.select(origin, sel)
        elif kind == 1:
            x0, y0 = rng.uniform(-50, 50, 2)
            ev = ViewEvent.move_camera(origin, Camera(Extent(x0, x0 + 10, y0, y0 + 5)))
        else:
            row = None if rng.random() < 0.3 else int(rng.integers(0, 30))
            ev = ViewEvent.hover(origin, row)
        group, _ = apply_event(group, ev)
        _check_sync_invariants(group)


def test_default_camera_positive_spans_on_empty_and_degenerate():
    empty = PointTable(x=[], y=[])
    cam = default_camera(empty, VP)
    assert cam.extent.x_span > 0 and cam.extent.y_span > 0
    single = PointTable(x=[2.0], y=[3.0])
    cam2 = default_camera(single, VP)
    assert cam2.extent.contains_point(2.0, 3.0)
    assert cam2.extent.x_span > 0
