import pytest

from xaicross.errors import SchemaError
from xaicross.schema import (
    ColumnSpec,
    FeatureSchema,
    default_schema,
    dumps_schema,
    encoded_display_values,
    parse_schema_config,
)

EXPECTED_DEFAULT_FEATURES = [
    "encnt_Emergency", "encnt_Outpatient", "encnt_Inpatient",
    "admission_source",
    "race_BlackAfricanAmerican", "race_White", "race_Other",
    "ethnicity_HispanicLatino", "ethnicity_Not",
    "gender_F", "gender_M",
    "financ_Medicare", "financ_Medicaid", "financ_Self", "financ_Commercial",
    "age", "zip_code", "admit_quarter", "admit_year",
]


def test_default_schema_encoded_names():
    schema = default_schema()
    assert schema.encoded_feature_names() == EXPECTED_DEFAULT_FEATURES
    assert schema.label == "mortality"


def test_default_admission_source_codes():
    col = default_schema().column("admission_source")
    assert col.ordinal_map["clinic referral"] == 0
    assert col.ordinal_map["emergency room"] == 2
    assert col.ordinal_map[
        "transfer from another health care facility (includes rehabilitation "
        "and psychiatric facilities)"] == 9
    assert sorted(col.ordinal_map.values()) == list(range(10))


def test_onehot_groups_and_units():
    schema = default_schema()
    groups = schema.onehot_groups()
    assert [0, 1, 2] in groups and [11, 12, 13, 14] in groups
    units = schema.perturbation_units()
    covered = sorted(j for unit in units for j in unit)
    assert covered == list(range(19))
    assert [3] in units  # the ordinal column is its own unit


def test_numeric_indices():
    schema = default_schema()
    names = schema.encoded_feature_names()
    assert [names[j] for j in schema.numeric_feature_indices()] == \
        ["age", "zip_code", "admit_quarter", "admit_year"]


def test_ordinal_map_must_cover_categories():
    with pytest.raises(SchemaError):
        ColumnSpec(name="x", kind="ordinal", categories=("a", "b"),
                   ordinal_map={"a": 0})


def test_ordinal_codes_must_be_distinct():
    with pytest.raises(SchemaError):
        ColumnSpec(name="x", kind="ordinal", categories=("a", "b"),
                   ordinal_map={"a": 0, "b": 0})


def test_duplicate_raw_columns_rejected():
    col = ColumnSpec(name="a", kind="numeric")
    with pytest.raises(SchemaError):
        FeatureSchema(columns=(col, col))


def test_duplicate_encoded_names_rejected():
    with pytest.raises(SchemaError):
        FeatureSchema(columns=(
            ColumnSpec(name="a", kind="onehot", categories=("x",)),
            ColumnSpec(name="a_x", kind="numeric"),
        ))


def test_label_clash_rejected():
    with pytest.raises(SchemaError):
        FeatureSchema(columns=(ColumnSpec(name="mortality", kind="numeric"),))


def test_unknown_kind_rejected():
    with pytest.raises(SchemaError):
        ColumnSpec(name="x", kind="fancy")


def test_config_round_trip():
    schema = default_schema()
    again = parse_schema_config(dumps_schema(schema))
    assert again == schema


def test_prefix_defaults_to_column_name():
    col = ColumnSpec(name="pet", kind="onehot", categories=("cat", "dog"))
    assert col.encoded_names() == ["pet_cat", "pet_dog"]


def test_encoded_display_values(tiny_schema):
    row = ["green", "mid", 42.0, 1]
    values = encoded_display_values(tiny_schema, row)
    assert values == ["green", "green", "green", "mid", "42"]
