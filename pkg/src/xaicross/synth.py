"""Synthetic cohort generation.

Stands in for real visit-level data: categorical columns are drawn from
configurable marginals, numeric columns from configurable integer ranges, and
the binary label is sampled from a logistic model over the *encoded* features
with caller-supplied log-odds weights. Everything is deterministic under the
seed.
"""

import numpy as np

from . import _kernels
from .errors import SchemaError, TooFewRowsError
from .pipeline import RawTable, encode
from .schema import KIND_NUMERIC

DEFAULT_NUMERIC_RANGES = {
    "age": (18, 95),
    "zip_code": (765, 789),
    "admit_quarter": (1, 4),
    "admit_year": (2020, 2021),
}
FALLBACK_NUMERIC_RANGE = (0, 100)


def _category_probs(col, marginals):
    probs = None
    if marginals and col.name in marginals:
        table = marginals[col.name]
        unknown = set(table) - set(col.categories)
        if unknown:
            raise SchemaError(
                f"marginal for {col.name!r} names unknown categories: {sorted(unknown)}")
        weights = np.array([float(table.get(c, 0.0)) for c in col.categories])
        if weights.sum() <= 0:
            raise SchemaError(f"marginal for {col.name!r} must have positive mass")
        probs = weights / weights.sum()
    return probs


def generate_synthetic_cohort(n, seed, schema, risk_spec, *, intercept=-3.0,
                              marginals=None, numeric_ranges=None):
    """Draw ``n`` visits and label them from a logistic risk model.

    ``risk_spec`` maps encoded feature names to log-odds weights; the label
    probability for a row is ``sigmoid(intercept + weights . encoded_row)``.
    """
    if n < 1:
        raise TooFewRowsError("cohort size must be >= 1")
    encoded_names = schema.encoded_feature_names()
    unknown = set(risk_spec) - set(encoded_names)
    if unknown:
        raise SchemaError(f"risk_spec names unknown encoded features: {sorted(unknown)}")

    rng = np.random.default_rng(seed)
    ranges = dict(DEFAULT_NUMERIC_RANGES)
    if numeric_ranges:
        ranges.update(numeric_ranges)

    columns = []
    for col in schema.columns:
        if col.kind == KIND_NUMERIC:
            low, high = ranges.get(col.name, FALLBACK_NUMERIC_RANGE)
            if high < low:
                raise SchemaError(f"numeric range for {col.name!r} is empty")
            columns.append(rng.integers(low, high + 1, size=n).tolist())
        else:
            probs = _category_probs(col, marginals)
            draws = rng.choice(len(col.categories), size=n, p=probs)
            columns.append([col.categories[k] for k in draws])

    rows = [[columns[c][r] for c in range(len(columns))] for r in range(n)]
    features = RawTable(header=schema.column_names(), rows=rows)

    weights = np.array([float(risk_spec.get(name, 0.0)) for name in encoded_names])
    design = encode(features, schema).values
    p = _kernels.sigmoid(intercept + design @ weights)
    labels = rng.binomial(1, p)

    header = schema.column_names() + [schema.label]
    labelled = [row + [int(labels[r])] for r, row in enumerate(rows)]
    return RawTable(header=header, rows=labelled)
