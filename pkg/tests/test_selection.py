import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from megascatter import (
    CombineMode,
    LassoPolygon,
    PointTable,
    SelectionSet,
    build_index,
    combine,
    lasso_select,
    query_extent,
    query_select,
)
from megascatter.errors import InvalidPolygonError, SelectionRangeError
from conftest import random_table


def point_in_polygon_scalar(x, y, vertices):
    """Independent per-point even-odd test with the same edge convention."""
    inside = False
    k = len(vertices)
    for i in range(k):
        xi, yi = vertices[i]
        xj, yj = vertices[(i + 1) % k]
        if (yi > y) != (yj > y):
            x_at = (xj - xi) * (y - yi) / (yj - yi) + xi
            if x < x_at:
                inside = not inside
    return inside


def star_polygon(rng, vertex_count, center=(0.0, 0.0), radius=50.0):
    """Random simple polygon: angle-sorted vertices at random radii."""
    angles = np.sort(rng.uniform(0, 2 * np.pi, vertex_count))
    radii = rng.uniform(0.2 * radius, radius, vertex_count)
    xs = center[0] + radii * np.cos(angles)
    ys = center[1] + radii * np.sin(angles)
    return LassoPolygon(np.column_stack([xs, ys]))


class TestLasso:
    def test_triangle_contains_origin(self):
        table = PointTable(x=[0.0], y=[0.0])
        index = build_index(table)
        poly = LassoPolygon(np.array([[-1, -1], [1, -1], [0, 1]], dtype=float))
        assert lasso_select(index, table, poly).indices.tolist() == [0]

    def test_empty_table(self):
        table = PointTable(x=[], y=[])
        index = build_index(table)
        poly = LassoPolygon(np.array([[-1, -1], [1, -1], [0, 1]], dtype=float))
        assert len(lasso_select(index, table, poly)) == 0

    def test_point_outside(self):
        table = PointTable(x=[5.0], y=[5.0])
        index = build_index(table)
        poly = LassoPolygon(np.array([[-1, -1], [1, -1], [0, 1]], dtype=float))
        assert len(lasso_select(index, table, poly)) == 0

    def test_invalid_polygons(self):
        with pytest.raises(InvalidPolygonError):
            LassoPolygon(np.array([[0, 0], [1, 1]], dtype=float))
        with pytest.raises(InvalidPolygonError):
            LassoPolygon(np.array([[0, 0], [1, 1], [np.nan, 0]]))

    def test_matches_brute_force_bulk(self):
        # The full-size 10k x 50 sweep runs in the acceptance suite.
        table = random_table(1500, seed=21, lo=-60, hi=60)
        index = build_index(table)
        rng = np.random.default_rng(22)
        for _ in range(25):
            poly = star_polygon(
                rng,
                vertex_count=int(rng.integers(8, 33)),
                center=tuple(rng.uniform(-40, 40, 2)),
                radius=float(rng.uniform(5, 60)),
            )
            got = lasso_select(index, table, poly).indices
            expected = [
                i for i in range(table.row_count)
                if point_in_polygon_scalar(table.x[i], table.y[i], poly.vertices)
            ]
            assert got.tolist() == expected

    def test_self_intersecting_lasso_follows_even_odd(self):
        # Bowtie: the crossing region is traversed twice, so even-odd
        # excludes nothing in the two lobes but the center line flips.
        table = PointTable(x=[-0.5, 0.5], y=[0.0, 0.0])
        index = build_index(table)
        bowtie = LassoPolygon(np.array([[-1, -1], [1, 1], [1, -1], [-1, 1]], dtype=float))
        got = lasso_select(index, table, bowtie).indices.tolist()
        expected = [
            i for i in range(2)
            if point_in_polygon_scalar(table.x[i], table.y[i], bowtie.vertices)
        ]
        assert got == expected

    def test_subset_of_bounding_extent_query(self):
        table = random_table(2000, seed=23)
        index = build_index(table)
        rng = np.random.default_rng(24)
        poly = star_polygon(rng, 12, center=(10, -5), radius=40)
        inside = set(lasso_select(index, table, poly).indices.tolist())
        box = set(query_extent(index, poly.bounding_extent()).tolist())
        assert inside <= box


class TestQuerySelect:
    def test_sorts_and_dedups(self):
        table = random_table(10, seed=0)
        assert query_select(table, [3, 1, 1, 2]).indices.tolist() == [1, 2, 3]

    def test_empty(self):
        table = random_table(10, seed=0)
        assert len(query_select(table, [])) == 0

    def test_out_of_range(self):
        table = random_table(10, seed=0)
        with pytest.raises(SelectionRangeError) as err:
            query_select(table, [10])
        assert err.value.index == 10

    def test_first_offender_reported(self):
        table = random_table(10, seed=0)
        with pytest.raises(SelectionRangeError) as err:
            query_select(table, [2, 99, 10])
        assert err.value.index == 99

    def test_negative_rejected(self):
        table = random_table(10, seed=0)
        with pytest.raises(SelectionRangeError):
            query_select(table, [-1])


sets_strategy = st.lists(st.integers(0, 60), max_size=40)


class TestCombine:
    def test_union(self):
        a = SelectionSet.from_unsorted([1, 2])
        b = SelectionSet.from_unsorted([2, 3])
        assert combine(a, b, CombineMode.UNION).indices.tolist() == [1, 2, 3]

    def test_difference(self):
        a = SelectionSet.from_unsorted([1, 2, 3])
        b = SelectionSet.from_unsorted([2])
        assert combine(a, b, CombineMode.DIFFERENCE).indices.tolist() == [1, 3]

    @given(sets_strategy, sets_strategy)
    @settings(max_examples=150)
    def test_against_set_oracle(self, raw_a, raw_b):
        a = SelectionSet.from_unsorted(raw_a)
        b = SelectionSet.from_unsorted(raw_b)
        sa, sb = set(raw_a), set(raw_b)
        assert combine(a, b, CombineMode.UNION).indices.tolist() == sorted(sa | sb)
        assert combine(a, b, CombineMode.INTERSECTION).indices.tolist() == sorted(sa & sb)
        assert combine(a, b, CombineMode.DIFFERENCE).indices.tolist() == sorted(sa - sb)

    @given(sets_strategy, sets_strategy)
    @settings(max_examples=60)
    def test_commutativity(self, raw_a, raw_b):
        a = SelectionSet.from_unsorted(raw_a)
        b = SelectionSet.from_unsorted(raw_b)
        assert combine(a, b, CombineMode.UNION) == combine(b, a, CombineMode.UNION)
        assert combine(a, b, CombineMode.INTERSECTION) == combine(b, a, CombineMode.INTERSECTION)

    @given(sets_strategy)
    @settings(max_examples=60)
    def test_identities(self, raw):
        a = SelectionSet.from_unsorted(raw)
        empty = SelectionSet.empty()
        assert len(combine(a, a, CombineMode.DIFFERENCE)) == 0
        assert combine(a, empty, CombineMode.UNION) == a


class TestSelectionSet:
    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            SelectionSet(np.array([2, 1]))

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            SelectionSet(np.array([1, 1]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            SelectionSet(np.array([-3, 1]))
