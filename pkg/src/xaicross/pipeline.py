"""Cohort table ingestion and encoding.

``RawTable`` holds parsed CSV cells (``None`` marks a missing value, never a
sentinel number). ``encode`` turns a complete table into a dense float matrix
following the schema's one-hot / ordinal / numeric rules, and ``decode``
inverts it. ``split`` produces a seeded, reproducible train/test partition.

CSV dialect everywhere: comma separated, double-quote quoting, UTF-8, first
row is the header.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    HeaderMismatchError,
    MalformedRowError,
    MissingValueError,
    SchemaError,
    TooFewRowsError,
    UnknownCategoryError,
)
from .schema import KIND_NUMERIC, KIND_ONEHOT, KIND_ORDINAL


@dataclass
class RawTable:
    """Header plus row-major cells; one row per patient visit."""

    header: list
    rows: list

    def __post_init__(self):
        width = len(self.header)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise MalformedRowError(
                    f"row {i} has {len(row)} cells, expected {width}")

    @property
    def n_rows(self):
        return len(self.rows)

    def column_index(self, name):
        try:
            return self.header.index(name)
        except ValueError:
            raise SchemaError(f"table has no column {name!r}") from None


@dataclass
class EncodedMatrix:
    """Dense numeric design matrix with optional binary labels."""

    feature_names: list
    values: np.ndarray
    labels: np.ndarray = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise SchemaError("encoded values must be a 2-D matrix")
        if len(self.feature_names) != self.values.shape[1]:
            raise SchemaError("feature_names length must match the matrix width")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int8)
            if self.labels.shape != (self.values.shape[0],):
                raise SchemaError("labels length must match the row count")

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    def take(self, indices):
        labels = None if self.labels is None else self.labels[indices]
        return EncodedMatrix(list(self.feature_names), self.values[indices], labels)


@dataclass
class SplitPair:
    """Disjoint train/test partition of an encoded matrix."""

    train: EncodedMatrix
    test: EncodedMatrix
    seed: int
    train_indices: np.ndarray = None
    test_indices: np.ndarray = None


def _parse_numeric_cell(cell):
    cell = cell.strip()
    if not cell:
        return None
    try:
        return float(cell)
    except ValueError:
        return None


def _parse_label_cell(cell, label):
    cell = cell.strip()
    if not cell:
        return None
    if cell in ("0", "1"):
        return int(cell)
    raise SchemaError(f"label column {label!r} must contain 0/1, got {cell!r}")


def load_csv(path, schema):
    """Read a cohort CSV and reorder it to schema column order.

    The header must contain exactly the schema columns (label optional, any
    order). Unparseable numeric cells and empty cells become missing.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HeaderMismatchError(missing=schema.column_names(), extra=[]) from None
        header = [h.strip() for h in header]
        expected = set(schema.column_names())
        allowed = expected | {schema.label}
        missing = expected - set(header)
        extra = set(header) - allowed
        if missing or extra:
            raise HeaderMismatchError(missing=missing, extra=extra)

        has_label = schema.label in header
        out_header = schema.column_names() + ([schema.label] if has_label else [])
        src_index = {name: header.index(name) for name in out_header}

        rows = []
        for lineno, cells in enumerate(reader, start=2):
            if len(cells) != len(header):
                raise MalformedRowError(
                    f"line {lineno}: expected {len(header)} cells, got {len(cells)}")
            row = []
            for col in schema.columns:
                cell = cells[src_index[col.name]]
                if col.kind == KIND_NUMERIC:
                    row.append(_parse_numeric_cell(cell))
                else:
                    cell = cell.strip()
                    row.append(cell if cell else None)
            if has_label:
                row.append(_parse_label_cell(cells[src_index[schema.label]], schema.label))
            rows.append(row)
    return RawTable(header=out_header, rows=rows)


def filter_complete(table):
    """Keep only rows without any missing cell; row order is preserved."""
    rows = [row for row in table.rows if all(cell is not None for cell in row)]
    return RawTable(header=list(table.header), rows=rows)


def encode(table, schema):
    """Expand a complete table into the encoded design matrix.

    One-hot columns become one indicator per declared category, the ordinal
    column maps through its code table, numeric columns pass through, and the
    label column (when present) is extracted into the ``labels`` vector.
    """
    col_pos = {name: table.column_index(name) for name in schema.column_names()}
    has_label = schema.label in table.header
    label_pos = table.column_index(schema.label) if has_label else None

    feature_names = schema.encoded_feature_names()
    n, d = table.n_rows, len(feature_names)
    values = np.zeros((n, d), dtype=np.float64)
    labels = np.zeros(n, dtype=np.int8) if has_label else None

    for r, row in enumerate(table.rows):
        if any(cell is None for cell in row):
            raise MissingValueError(f"row {r} has missing cells; filter first")
        j = 0
        for col in schema.columns:
            cell = row[col_pos[col.name]]
            if col.kind == KIND_ONEHOT:
                try:
                    k = col.categories.index(cell)
                except ValueError:
                    raise UnknownCategoryError(col.name, cell) from None
                values[r, j + k] = 1.0
                j += len(col.categories)
            elif col.kind == KIND_ORDINAL:
                if cell not in col.ordinal_map:
                    raise UnknownCategoryError(col.name, cell)
                values[r, j] = float(col.ordinal_map[cell])
                j += 1
            else:
                values[r, j] = float(cell)
                j += 1
        if has_label:
            labels[r] = int(row[label_pos])
    return EncodedMatrix(feature_names=feature_names, values=values, labels=labels)


def decode(matrix, schema):
    """Invert :func:`encode`: argmax within one-hot groups, inverse ordinal map."""
    if matrix.feature_names != schema.encoded_feature_names():
        raise SchemaError("matrix feature names do not match the schema")
    header = schema.column_names()
    has_label = matrix.labels is not None
    if has_label:
        header = header + [schema.label]
    inverse_ordinal = {
        col.name: {code: cat for cat, code in col.ordinal_map.items()}
        for col in schema.columns if col.kind == KIND_ORDINAL
    }
    rows = []
    for r in range(matrix.n_rows):
        row = []
        for col, a, b in schema.encoded_spans():
            block = matrix.values[r, a:b]
            if col.kind == KIND_ONEHOT:
                row.append(col.categories[int(np.argmax(block))])
            elif col.kind == KIND_ORDINAL:
                row.append(inverse_ordinal[col.name][int(block[0])])
            else:
                row.append(float(block[0]))
        if has_label:
            row.append(int(matrix.labels[r]))
        rows.append(row)
    return RawTable(header=header, rows=rows)


def split(matrix, test_fraction, seed, stratify=False):
    """Seeded uniform train/test split; sizes within one row of the ratio."""
    n = matrix.n_rows
    if n < 2:
        raise TooFewRowsError("need at least 2 rows to split")
    if matrix.labels is None:
        raise SchemaError("split requires labels")
    if not 0.0 < test_fraction < 1.0:
        raise SchemaError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    if stratify:
        test_parts = []
        for cls in (0, 1):
            cls_idx = np.nonzero(matrix.labels == cls)[0]
            perm = rng.permutation(cls_idx)
            test_parts.append(perm[:int(round(len(cls_idx) * test_fraction))])
        test_idx = np.sort(np.concatenate(test_parts)).astype(np.int64)
    else:
        perm = rng.permutation(n)
        n_test = int(round(n * test_fraction))
        n_test = min(max(n_test, 1), n - 1)
        test_idx = np.sort(perm[:n_test])
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.nonzero(~mask)[0]
    return SplitPair(train=matrix.take(train_idx), test=matrix.take(test_idx),
                     seed=seed, train_indices=train_idx, test_indices=test_idx)


def _format_cell(cell):
    if cell is None:
        return ""
    if isinstance(cell, float):
        return str(int(cell)) if cell.is_integer() else repr(cell)
    return str(cell)


def write_raw_csv(table, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_format_cell(c) for c in row])


def write_encoded_csv(matrix, path, label_name="mortality"):
    """Export the encoded matrix with encoded header names (full precision)."""
    header = list(matrix.feature_names)
    if matrix.labels is not None:
        header.append(label_name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in range(matrix.n_rows):
            cells = [repr(float(v)) for v in matrix.values[r]]
            if matrix.labels is not None:
                cells.append(str(int(matrix.labels[r])))
            writer.writerow(cells)


def read_encoded_csv(path, label_name="mortality"):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        has_label = header and header[-1] == label_name
        names = header[:-1] if has_label else header
        values, labels = [], []
        for cells in reader:
            if has_label:
                values.append([float(c) for c in cells[:-1]])
                labels.append(int(cells[-1]))
            else:
                values.append([float(c) for c in cells])
    return EncodedMatrix(feature_names=names,
                         values=np.array(values, dtype=np.float64).reshape(len(values), len(names)),
                         labels=np.array(labels, dtype=np.int8) if has_label else None)
