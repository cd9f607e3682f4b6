"""Declarative description of raw cohort columns and their encodings.

A :class:`FeatureSchema` lists the raw columns in order, how each one is
encoded (one-hot expansion, ordinal code, or numeric passthrough), and the
name of the binary label column. The mapping from raw columns to encoded
feature names is deterministic: one-hot columns expand to
``<prefix>_<category>`` (prefix defaults to the column name), everything else
keeps its column name.

Schemas can be built in code or loaded from an INI config file; the packaged
default schema (``xaicross/data/default_schema.ini``) describes a hospital
cohort with socio-economic features and a 0-9 coded admission source.
"""

import configparser
from dataclasses import dataclass, field
from importlib import resources

from .errors import SchemaError

KIND_ONEHOT = "onehot"
KIND_ORDINAL = "ordinal"
KIND_NUMERIC = "numeric"
_KINDS = (KIND_ONEHOT, KIND_ORDINAL, KIND_NUMERIC)


@dataclass(frozen=True)
class ColumnSpec:
    """One raw column and its encoding rule."""

    name: str
    kind: str
    categories: tuple = ()
    ordinal_map: dict = None
    prefix: str = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == KIND_NUMERIC:
            if self.categories:
                raise SchemaError(f"numeric column {self.name!r} must not declare categories")
            return
        if not self.categories:
            raise SchemaError(f"column {self.name!r}: {self.kind} encoding needs categories")
        if len(set(self.categories)) != len(self.categories):
            raise SchemaError(f"column {self.name!r}: duplicate categories")
        if self.kind == KIND_ORDINAL:
            omap = self.ordinal_map
            if omap is None:
                omap = {c: i for i, c in enumerate(self.categories)}
                object.__setattr__(self, "ordinal_map", omap)
            if set(omap) != set(self.categories):
                raise SchemaError(
                    f"column {self.name!r}: ordinal_map must cover exactly the declared categories")
            codes = list(omap.values())
            if len(set(codes)) != len(codes):
                raise SchemaError(f"column {self.name!r}: ordinal codes must be distinct")
            if any(int(c) != c for c in codes):
                raise SchemaError(f"column {self.name!r}: ordinal codes must be integers")

    @property
    def encoded_prefix(self):
        return self.prefix if self.prefix else self.name

    def encoded_names(self):
        if self.kind == KIND_ONEHOT:
            return [f"{self.encoded_prefix}_{c}" for c in self.categories]
        return [self.name]


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered raw columns plus the label column name."""

    columns: tuple
    label: str = "mortality"

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if not names:
            raise SchemaError("schema needs at least one column")
        if len(set(names)) != len(names):
            raise SchemaError("duplicate raw column names")
        if self.label in names:
            raise SchemaError(f"label {self.label!r} clashes with a feature column")
        encoded = self.encoded_feature_names()
        if len(set(encoded)) != len(encoded):
            raise SchemaError("duplicate encoded feature names")

    def column_names(self):
        return [c.name for c in self.columns]

    def encoded_feature_names(self):
        names = []
        for col in self.columns:
            names.extend(col.encoded_names())
        return names

    def column(self, name):
        for col in self.columns:
            if col.name == name:
                return col
        raise SchemaError(f"no column named {name!r}")

    def encoded_spans(self):
        """Per raw column: (column, start, stop) index range in the encoded matrix."""
        spans = []
        start = 0
        for col in self.columns:
            width = len(col.encoded_names())
            spans.append((col, start, start + width))
            start += width
        return spans

    def onehot_groups(self):
        """Encoded index groups that must stay one-hot (row sum 1)."""
        return [list(range(a, b)) for col, a, b in self.encoded_spans()
                if col.kind == KIND_ONEHOT]

    def perturbation_units(self):
        """Encoded index groups perturbed atomically: one-hot groups whole,
        every other encoded feature on its own."""
        units = []
        for col, a, b in self.encoded_spans():
            if col.kind == KIND_ONEHOT:
                units.append(list(range(a, b)))
            else:
                units.extend([i] for i in range(a, b))
        return units

    def numeric_feature_indices(self):
        return [a for col, a, b in self.encoded_spans() if col.kind == KIND_NUMERIC]


def encoded_display_values(schema, row_cells):
    """Align one raw row with the encoded features for display purposes.

    ``row_cells`` follows schema column order (label cell, if any, ignored).
    Every encoded feature of a one-hot column shows the column's raw category.
    """
    if len(row_cells) < len(schema.columns):
        raise SchemaError("row has fewer cells than schema columns")
    out = []
    for k, col in enumerate(schema.columns):
        cell = row_cells[k]
        if isinstance(cell, float) and cell.is_integer():
            cell = int(cell)
        out.extend([str(cell)] * len(col.encoded_names()))
    return out


def _split_list(raw):
    return [part.strip() for part in raw.split(",") if part.strip()]


def parse_schema_config(text):
    """Build a FeatureSchema from INI config text.

    Layout: a ``[schema]`` section with ``columns`` (ordered list) and
    ``label``, plus one ``[column.<name>]`` section per column carrying
    ``kind`` and, for categorical kinds, ``categories`` (and optional
    ``prefix`` / ``codes``).
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise SchemaError(f"invalid schema config: {exc}") from exc
    if "schema" not in parser:
        raise SchemaError("schema config needs a [schema] section")
    head = parser["schema"]
    if "columns" not in head:
        raise SchemaError("[schema] section needs a 'columns' list")
    label = head.get("label", "mortality").strip()
    columns = []
    for name in _split_list(head["columns"]):
        section = f"column.{name}"
        if section not in parser:
            raise SchemaError(f"missing [{section}] section")
        spec = parser[section]
        kind = spec.get("kind", "").strip()
        categories = tuple(_split_list(spec.get("categories", "")))
        prefix = spec.get("prefix", "").strip() or None
        ordinal_map = None
        if "codes" in spec:
            codes = [int(c) for c in _split_list(spec["codes"])]
            if len(codes) != len(categories):
                raise SchemaError(f"column {name!r}: codes must match categories 1:1")
            ordinal_map = dict(zip(categories, codes))
        columns.append(ColumnSpec(name=name, kind=kind, categories=categories,
                                  ordinal_map=ordinal_map, prefix=prefix))
    return FeatureSchema(columns=tuple(columns), label=label)


def load_schema(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_schema_config(fh.read())


def dumps_schema(schema):
    """Render a FeatureSchema back to INI config text (parse round-trip)."""
    lines = ["[schema]",
             f"label = {schema.label}",
             "columns = " + ", ".join(schema.column_names()),
             ""]
    for col in schema.columns:
        lines.append(f"[column.{col.name}]")
        lines.append(f"kind = {col.kind}")
        if col.prefix:
            lines.append(f"prefix = {col.prefix}")
        if col.categories:
            lines.append("categories = " + ", ".join(col.categories))
        if col.kind == KIND_ORDINAL:
            lines.append("codes = " + ", ".join(str(col.ordinal_map[c]) for c in col.categories))
        lines.append("")
    return "\n".join(lines)


def default_schema():
    """The packaged hospital-cohort schema (19 encoded features, label 'mortality')."""
    text = resources.files("xaicross").joinpath("data/default_schema.ini").read_text("utf-8")
    return parse_schema_config(text)
