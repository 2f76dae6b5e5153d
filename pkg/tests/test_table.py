import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from megascatter import (
    CategoricalColumn,
    ChannelKind,
    NumericColumn,
    PointTable,
    category_frequencies,
    column_stats,
    histogram,
    infer_channel_kind,
    ingest_csv,
)
from megascatter.errors import (
    ColumnError,
    EmptyInputError,
    KindMismatchError,
    ParseError,
)


def make_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode()


class TestIngest:
    def test_basic_categorical(self):
        table = ingest_csv(make_csv("x y c".split(), [[0, 0, "a"], [1, 1, "b"], [2, 2, "a"]]), "x", "y")
        assert table.row_count == 3
        col = table.columns["c"]
        assert isinstance(col, CategoricalColumn)
        assert col.labels == ("a", "b")
        assert col.codes.tolist() == [0, 1, 0]

    def test_row_order_preserved(self):
        table = ingest_csv(make_csv(["x", "y"], [[5, 1], [3, 2], [4, 9]]), "x", "y")
        assert table.x.tolist() == [5.0, 3.0, 4.0]
        assert table.y.tolist() == [1.0, 2.0, 9.0]

    def test_non_numeric_coordinate_is_parse_error_with_row(self):
        with pytest.raises(ParseError) as err:
            ingest_csv(b"x,y\n1,oops\n", "x", "y")
        assert err.value.row == 1

    def test_non_finite_coordinate_rejected(self):
        with pytest.raises(ParseError) as err:
            ingest_csv(b"x,y\n1,2\n3,inf\n", "x", "y")
        assert err.value.row == 2

    def test_missing_column(self):
        with pytest.raises(ColumnError):
            ingest_csv(b"x,y\n1,2\n", "x", "z")

    def test_empty_file(self):
        with pytest.raises(EmptyInputError):
            ingest_csv(b"", "x", "y")
        with pytest.raises(EmptyInputError):
            ingest_csv(b"   \n", "x", "y")

    def test_empty_field_rejected(self):
        with pytest.raises(ParseError) as err:
            ingest_csv(b"x,y,c\n1,2,a\n3,4,\n", "x", "y")
        assert err.value.row == 2

    def test_ragged_row_names_offender(self):
        with pytest.raises(ParseError) as err:
            ingest_csv(b"x,y\n1,2\n1,2,3\n", "x", "y")
        assert err.value.row == 2

    def test_duplicate_header(self):
        with pytest.raises(ColumnError):
            ingest_csv(b"x,x\n1,2\n", "x", "x")

    def test_quoted_fields(self):
        data = b'x,y,name\n1,2,"Lake, The"\n3,4,"say ""hi"""\n'
        table = ingest_csv(data, "x", "y")
        assert table.columns["name"].labels == ('Lake, The', 'say "hi"')

    def test_numeric_column_never_coerced_categorical(self):
        table = ingest_csv(make_csv(["x", "y", "v"], [[0, 0, 1], [1, 1, 2]]), "x", "y")
        assert isinstance(table.columns["v"], NumericColumn)

    def test_nonfinite_token_in_aux_column_becomes_categorical(self):
        table = ingest_csv(b"x,y,v\n0,0,1.5\n1,1,nan\n", "x", "y")
        assert isinstance(table.columns["v"], CategoricalColumn)

    def test_coordinate_columns_remain_addressable(self):
        table = ingest_csv(b"x,y\n1,2\n", "x", "y")
        assert infer_channel_kind(table, "x") is ChannelKind.CONTINUOUS

    def test_header_only_gives_empty_table(self):
        table = ingest_csv(b"x,y\n", "x", "y")
        assert table.row_count == 0

    def test_demo_dataset_shape(self, demo_table):
        assert infer_channel_kind(demo_table, "Continent") is ChannelKind.CATEGORICAL
        assert column_stats(demo_table, "Continent").unique_count == 7
        assert infer_channel_kind(demo_table, "Population") is ChannelKind.CONTINUOUS


class TestStats:
    def test_simple_min_max(self):
        table = PointTable(x=[0, 1, 2], y=[0, 0, 0], columns={"v": NumericColumn([1, 2, 3])})
        s = column_stats(table, "v")
        assert (s.min, s.max, s.has_nonpositive) == (1.0, 3.0, False)

    def test_nonpositive_flag(self):
        table = PointTable(x=[0, 1], y=[0, 0], columns={"v": NumericColumn([0, 5])})
        assert column_stats(table, "v").has_nonpositive

    def test_categorical_unique_count(self):
        col = CategoricalColumn([0, 1, 0], ("a", "b"))
        table = PointTable(x=[0, 1, 2], y=[0, 0, 0], columns={"c": col})
        assert column_stats(table, "c").unique_count == 2

    def test_unknown_column(self):
        table = PointTable(x=[0], y=[0])
        with pytest.raises(ColumnError):
            column_stats(table, "nope")


class TestHistogram:
    def test_symmetric_split(self):
        table = PointTable(x=list(range(10)), y=[0] * 10,
                           columns={"v": NumericColumn(list(range(10)))})
        assert histogram(table, "v", 2) == [5, 5]

    def test_degenerate_width_lands_in_last_bin(self):
        table = PointTable(x=[0] * 7, y=[0] * 7, columns={"v": NumericColumn([3.5] * 7)})
        assert histogram(table, "v", 4) == [0, 0, 0, 7]

    def test_max_value_lands_in_last_bin(self):
        table = PointTable(x=[0, 1], y=[0, 0], columns={"v": NumericColumn([0.0, 10.0])})
        assert histogram(table, "v", 5) == [1, 0, 0, 0, 1]

    def test_against_per_value_oracle(self):
        rng = np.random.default_rng(42)
        values = rng.uniform(0.0, 1.0, 1000)
        table = PointTable(x=values, y=values, columns={"v": NumericColumn(values)})
        got = histogram(table, "v", 10)

        lo, hi = values.min(), values.max()
        width = (hi - lo) / 10
        expected = [0] * 10
        for v in values:
            expected[min(int(math.floor((v - lo) / width)), 9)] += 1
        assert got == expected
        assert sum(got) == 1000

    def test_kind_mismatch(self):
        col = CategoricalColumn([0], ("a",))
        table = PointTable(x=[0], y=[0], columns={"c": col})
        with pytest.raises(KindMismatchError):
            histogram(table, "c", 4)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=300),
           st.integers(1, 32))
    @settings(max_examples=100)
    def test_counts_always_sum_to_row_count(self, values, bins):
        table = PointTable(x=values, y=values, columns={"v": NumericColumn(values)})
        assert sum(histogram(table, "v", bins)) == len(values)


class TestCategoryFrequencies:
    def test_basic(self):
        col = CategoricalColumn([0, 1, 0], ("a", "b"))
        table = PointTable(x=[0, 1, 2], y=[0, 0, 0], columns={"c": col})
        assert category_frequencies(table, "c") == [("a", 2), ("b", 1)]

    def test_single_label(self):
        col = CategoricalColumn([0] * 5, ("only",))
        table = PointTable(x=[0] * 5, y=[0] * 5, columns={"c": col})
        assert category_frequencies(table, "c") == [("only", 5)]

    def test_kind_mismatch(self):
        table = PointTable(x=[0], y=[0], columns={"v": NumericColumn([1])})
        with pytest.raises(KindMismatchError):
            category_frequencies(table, "v")

    def test_against_counting_oracle(self):
        rng = np.random.default_rng(7)
        tokens = [f"label{int(i)}" for i in rng.integers(0, 20, 500)]
        data = make_csv(["x", "y", "c"], [[i, i, tok] for i, tok in enumerate(tokens)])
        table = ingest_csv(data, "x", "y")

        oracle: dict[str, int] = {}
        for tok in tokens:
            oracle[tok] = oracle.get(tok, 0) + 1
        got = category_frequencies(table, "c")
        assert got == sorted(oracle.items())
        assert sum(n for _, n in got) == 500


label_strategy = st.text(
    alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), max_codepoint=0x24F),
    min_size=1, max_size=8,
)


@given(st.lists(label_strategy, min_size=1, max_size=80))
@settings(max_examples=100)
def test_ingested_codes_always_in_range(tokens):
    data = make_csv(["x", "y", "c"], [[i, i, tok] for i, tok in enumerate(tokens)])
    table = ingest_csv(data, "x", "y")
    col = table.columns["c"]
    if isinstance(col, CategoricalColumn):
        assert (col.codes < len(col.labels)).all()
        assert list(col.labels) == sorted(set(col.labels))
        rebuilt = [col.labels[c] for c in col.codes]
        assert rebuilt == [str(t) for t in tokens]
