import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xaicross.errors import (
    HeaderMismatchError,
    MalformedRowError,
    MissingValueError,
    SchemaError,
    TooFewRowsError,
    UnknownCategoryError,
)
from xaicross.pipeline import (
    EncodedMatrix,
    RawTable,
    decode,
    encode,
    filter_complete,
    load_csv,
    read_encoded_csv,
    split,
    write_encoded_csv,
    write_raw_csv,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


CSV_OK = ("age,grade,mortality,color\n"
          "40,low,0,red\n"
          "61,high,1,blue\n")


class TestLoadCsv:
    def test_reorders_to_schema_order(self, tmp_path, tiny_schema):
        table = load_csv(write(tmp_path, CSV_OK), tiny_schema)
        assert table.header == ["color", "grade", "age", "mortality"]
        assert table.rows[0] == ["red", "low", 40.0, 0]
        assert table.rows[1] == ["blue", "high", 61.0, 1]

    def test_missing_column_named_in_error(self, tmp_path, tiny_schema):
        path = write(tmp_path, "age,grade\n40,low\n")
        with pytest.raises(HeaderMismatchError) as err:
            load_csv(path, tiny_schema)
        assert "color" in str(err.value)

    def test_extra_column_named_in_error(self, tmp_path, tiny_schema):
        path = write(tmp_path, "age,grade,color,bonus\n4,low,red,1\n")
        with pytest.raises(HeaderMismatchError) as err:
            load_csv(path, tiny_schema)
        assert "bonus" in str(err.value)

    def test_unparseable_numeric_becomes_missing(self, tmp_path, tiny_schema):
        path = write(tmp_path, "color,grade,age\nred,low,seventy\n")
        table = load_csv(path, tiny_schema)
        assert table.n_rows == 1
        assert table.rows[0][2] is None

    def test_empty_cells_become_missing(self, tmp_path, tiny_schema):
        path = write(tmp_path, "color,grade,age\n,low,12\n")
        assert load_csv(path, tiny_schema).rows[0][0] is None

    def test_malformed_row_length(self, tmp_path, tiny_schema):
        path = write(tmp_path, "color,grade,age\nred,low\n")
        with pytest.raises(MalformedRowError):
            load_csv(path, tiny_schema)

    def test_bad_label_value(self, tmp_path, tiny_schema):
        path = write(tmp_path, "color,grade,age,mortality\nred,low,4,2\n")
        with pytest.raises(SchemaError):
            load_csv(path, tiny_schema)

    def test_missing_file(self, tiny_schema):
        with pytest.raises(OSError):
            load_csv("/nonexistent/nope.csv", tiny_schema)


class TestFilterComplete:
    def test_drops_rows_with_missing(self):
        table = RawTable(header=["a", "b"],
                         rows=[[1.0, 2.0], [None, 2.0], [3.0, 4.0]])
        kept = filter_complete(table)
        assert kept.rows == [[1.0, 2.0], [3.0, 4.0]]

    def test_identity_when_complete(self):
        table = RawTable(header=["a"], rows=[[1.0], [2.0]])
        assert filter_complete(table).rows == table.rows

    def test_empty_result_is_legal(self):
        table = RawTable(header=["a"], rows=[[None]])
        assert filter_complete(table).n_rows == 0

    def test_idempotent(self):
        table = RawTable(header=["a", "b"],
                         rows=[[1.0, None], [2.0, 2.0], [None, None]])
        once = filter_complete(table)
        twice = filter_complete(once)
        assert once.rows == twice.rows


class TestEncode:
    def test_onehot_and_ordinal_values(self, tiny_schema):
        table = RawTable(header=["color", "grade", "age", "mortality"],
                         rows=[["green", "high", 33.0, 1]])
        matrix = encode(table, tiny_schema)
        assert matrix.feature_names == ["color_red", "color_green", "color_blue",
                                        "grade", "age"]
        assert matrix.values[0].tolist() == [0.0, 1.0, 0.0, 2.0, 33.0]
        assert matrix.labels.tolist() == [1]

    def test_unknown_category_names_column_and_value(self, tiny_schema):
        table = RawTable(header=["color", "grade", "age"],
                         rows=[["purple", "low", 1.0]])
        with pytest.raises(UnknownCategoryError) as err:
            encode(table, tiny_schema)
        assert "color" in str(err.value) and "purple" in str(err.value)

    def test_incomplete_table_rejected(self, tiny_schema):
        table = RawTable(header=["color", "grade", "age"], rows=[["red", None, 1.0]])
        with pytest.raises(MissingValueError):
            encode(table, tiny_schema)

    def test_no_label_column(self, tiny_schema):
        table = RawTable(header=["color", "grade", "age"], rows=[["red", "low", 5.0]])
        assert encode(table, tiny_schema).labels is None


TINY = None


def _tiny():
    global TINY
    if TINY is None:
        from xaicross.schema import ColumnSpec, FeatureSchema
        TINY = FeatureSchema(columns=(
            ColumnSpec(name="color", kind="onehot", categories=("red", "green", "blue")),
            ColumnSpec(name="grade", kind="ordinal", categories=("low", "mid", "high")),
            ColumnSpec(name="age", kind="numeric"),
        ), label="mortality")
    return TINY


@st.composite
def raw_tables(draw):
    n = draw(st.integers(min_value=1, max_value=12))
    rows = []
    for _ in range(n):
        rows.append([
            draw(st.sampled_from(["red", "green", "blue"])),
            draw(st.sampled_from(["low", "mid", "high"])),
            float(draw(st.integers(min_value=0, max_value=99))),
            draw(st.integers(min_value=0, max_value=1)),
        ])
    return RawTable(header=["color", "grade", "age", "mortality"], rows=rows)


class TestEncodeProperties:
    @given(raw_tables())
    def test_onehot_rows_sum_to_one(self, table):
        schema = _tiny()
        matrix = encode(table, schema)
        for group in schema.onehot_groups():
            sums = matrix.values[:, group].sum(axis=1)
            assert np.all(sums == 1.0)

    @given(raw_tables())
    def test_decode_round_trip(self, table):
        schema = _tiny()
        matrix = encode(table, schema)
        back = decode(matrix, schema)
        assert back.header == table.header
        assert back.rows == table.rows


class TestSplit:
    def matrix(self, n, seed=0):
        rng = np.random.default_rng(seed)
        labels = np.zeros(n, dtype=np.int8)
        labels[: n // 3 + 1] = 1
        return EncodedMatrix([f"f{j}" for j in range(3)],
                             rng.normal(size=(n, 3)), labels)

    def test_sizes_and_disjoint(self):
        pair = split(self.matrix(10), 0.2, seed=7)
        assert pair.train.n_rows == 8 and pair.test.n_rows == 2
        assert set(pair.train_indices) | set(pair.test_indices) == set(range(10))
        assert set(pair.train_indices) & set(pair.test_indices) == set()

    def test_deterministic_under_seed(self):
        a = split(self.matrix(50), 0.2, seed=3)
        b = split(self.matrix(50), 0.2, seed=3)
        assert np.array_equal(a.test_indices, b.test_indices)
        assert np.array_equal(a.train.values, b.train.values)

    def test_different_seeds_differ(self):
        a = split(self.matrix(120), 0.2, seed=1)
        b = split(self.matrix(120), 0.2, seed=2)
        assert not np.array_equal(a.test_indices, b.test_indices)

    def test_cohort_scale_rounding(self):
        # 20% of 18368 rows rounds to 3674 test rows
        pair = split(self.matrix(18368), 0.2, seed=0)
        assert pair.test.n_rows == 3674

    def test_too_few_rows(self):
        with pytest.raises(TooFewRowsError):
            split(self.matrix(2).take(np.array([0])), 0.5, seed=0)

    def test_requires_labels(self):
        matrix = EncodedMatrix(["a"], np.zeros((5, 1)))
        with pytest.raises(SchemaError):
            split(matrix, 0.2, seed=0)

    def test_stratified_keeps_class_ratio(self):
        matrix = self.matrix(300)
        pair = split(matrix, 0.2, seed=5, stratify=True)
        want = int(round((matrix.labels == 1).sum() * 0.2))
        assert (pair.test.labels == 1).sum() == want


class TestCsvRoundTrips:
    def test_encoded_csv_round_trip(self, tmp_path, tiny_schema):
        table = RawTable(header=["color", "grade", "age", "mortality"],
                         rows=[["red", "low", 40.0, 0], ["blue", "high", 61.25, 1]])
        matrix = encode(table, tiny_schema)
        path = tmp_path / "enc.csv"
        write_encoded_csv(matrix, path, "mortality")
        again = read_encoded_csv(path, "mortality")
        assert again.feature_names == matrix.feature_names
        assert np.array_equal(again.values, matrix.values)
        assert np.array_equal(again.labels, matrix.labels)

    def test_raw_csv_round_trip(self, tmp_path, tiny_schema):
        table = RawTable(header=["color", "grade", "age", "mortality"],
                         rows=[["red", "low", 40.0, 0], ["blue", "high", 61.5, 1]])
        path = tmp_path / "raw.csv"
        write_raw_csv(table, path)
        again = load_csv(path, tiny_schema)
        assert again.header == ["color", "grade", "age", "mortality"]
        assert again.rows == table.rows
