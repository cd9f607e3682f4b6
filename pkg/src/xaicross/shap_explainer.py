"""Shapley-value attributions for individual predictions.

The coalition value of a feature subset S is the interventional expectation
over a background sample: absent features are replaced by background values
and the model output is averaged. ``exact_shapley`` enumerates every subset
and applies the factorial weights |S|! (d-|S|-1)! / d!, so the attributions
satisfy efficiency (baseline + sum(phi) == prediction). ``sampled_shapley``
is the Monte-Carlo permutation estimator of the same quantity with per-feature
standard errors.

Output space is the model probability by default; ``output_space="raw"``
explains log-odds instead (there Shapley linearity across models is exact).

Explanations for distinct instances are independent; derive one seed per
instance when running cohorts concurrently.
"""

import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .attribution import METHOD_SHAP_EXACT, METHOD_SHAP_SAMPLED, Attribution
from .errors import (
    DimensionMismatchError,
    SchemaError,
    TooFewRowsError,
    TooManyFeaturesError,
    XaiCrossError,
)

EXACT_FEATURE_CAP = 20
_COALITION_CHUNK = 1 << 13

OUTPUT_PROBABILITY = "probability"
OUTPUT_RAW = "raw"


@dataclass
class BackgroundSet:
    """Reference rows standing in for the data distribution."""

    rows: np.ndarray
    max_rows: int = None   # cap applied when the set was built, if any

    def __post_init__(self):
        self.rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2 or self.rows.shape[0] == 0:
            raise TooFewRowsError("background set must contain at least one row")

    @property
    def n_features(self):
        return self.rows.shape[1]


def make_background(matrix, max_rows=100, seed=0):
    """Sample up to ``max_rows`` reference rows (without replacement) from an
    encoded matrix or plain array."""
    rows = matrix.values if hasattr(matrix, "values") else np.asarray(matrix)
    if max_rows < 1:
        raise SchemaError("max_rows must be >= 1")
    if rows.shape[0] > max_rows:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(rows.shape[0], size=max_rows, replace=False))
        rows = rows[pick]
    return BackgroundSet(rows=rows, max_rows=max_rows)


def _check_dims(model, instance, background):
    instance = np.asarray(instance, dtype=np.float64)
    if instance.shape != (model.n_features,):
        raise DimensionMismatchError(
            f"instance must have {model.n_features} features, got {instance.shape}")
    if background.n_features != model.n_features:
        raise DimensionMismatchError(
            f"background width {background.n_features} != model features {model.n_features}")
    return instance


def _proba_flag(output_space):
    if output_space == OUTPUT_PROBABILITY:
        return True
    if output_space == OUTPUT_RAW:
        return False
    raise XaiCrossError(f"unknown output space {output_space!r}")


def _model_output(model, instance, proba):
    return model.predict_proba(instance) if proba else model.predict_raw(instance)


def value_function(model, instance, subset, background, output_space=OUTPUT_PROBABILITY):
    """Mean model output with features outside ``subset`` drawn from the background."""
    instance = _check_dims(model, instance, background)
    proba = _proba_flag(output_space)
    d = model.n_features
    mask = np.zeros((1, d), dtype=np.uint8)
    for j in subset:
        if not 0 <= j < d:
            raise DimensionMismatchError(f"feature index {j} out of range")
        mask[0, j] = 1
    out = _kernels.coalition_values(*model._flat(), model.base_score,
                                    instance, background.rows, mask, proba)
    return float(out[0])


def _subset_weights(d):
    # weight of a coalition of size s when adding one more feature
    fact = math.factorial
    return np.array([fact(s) * fact(d - s - 1) / fact(d) for s in range(d)])


def exact_shapley(model, instance, background, output_space=OUTPUT_PROBABILITY,
                  feature_cap=EXACT_FEATURE_CAP):
    """Full-enumeration Shapley attribution (2^d coalition evaluations)."""
    instance = _check_dims(model, instance, background)
    proba = _proba_flag(output_space)
    d = model.n_features
    if d > feature_cap:
        raise TooManyFeaturesError(
            f"{d} features exceeds the exact-enumeration cap of {feature_cap}; "
            "use sampled_shapley instead")

    n_masks = 1 << d
    ids = np.arange(n_masks, dtype=np.int64)
    v = np.empty(n_masks, dtype=np.float64)
    flat = model._flat()
    for a in range(0, n_masks, _COALITION_CHUNK):
        chunk = ids[a:a + _COALITION_CHUNK]
        masks = ((chunk[:, None] >> np.arange(d)[None, :]) & 1).astype(np.uint8)
        v[a:a + _COALITION_CHUNK] = _kernels.coalition_values(
            *flat, model.base_score, instance, background.rows, masks, proba)

    popcount = np.zeros(n_masks, dtype=np.int64)
    for j in range(d):
        popcount += (ids >> j) & 1
    weights = _subset_weights(d)

    phi = np.empty(d, dtype=np.float64)
    for i in range(d):
        bit = 1 << i
        without = ids[(ids & bit) == 0]
        phi[i] = np.sum(weights[popcount[without]] * (v[without | bit] - v[without]))

    return Attribution(feature_names=list(model.feature_names), phi=phi,
                       baseline=float(v[0]), prediction=float(v[n_masks - 1]),
                       method=METHOD_SHAP_EXACT)


def sampled_shapley(model, instance, background, n_permutations, seed,
                    output_space=OUTPUT_PROBABILITY):
    """Monte-Carlo permutation estimate of the exact attribution.

    Averages each feature's marginal contribution over ``n_permutations``
    uniformly random orderings; ``stderr`` is the per-feature standard error
    of that average (NaN when a single permutation is used).
    """
    instance = _check_dims(model, instance, background)
    proba = _proba_flag(output_space)
    if n_permutations < 1:
        raise XaiCrossError("n_permutations must be >= 1")
    d = model.n_features
    rng = np.random.default_rng(seed)
    perms = rng.permuted(np.tile(np.arange(d, dtype=np.int32), (n_permutations, 1)),
                         axis=1)
    contrib_sum, contrib_sumsq = _kernels.permutation_contributions(
        *model._flat(), model.base_score, instance, background.rows,
        perms, proba)
    phi = contrib_sum / n_permutations
    if n_permutations > 1:
        var = (contrib_sumsq - n_permutations * phi * phi) / (n_permutations - 1)
        stderr = np.sqrt(np.maximum(var, 0.0) / n_permutations)
    else:
        stderr = np.full(d, np.nan)

    empty = np.zeros((1, d), dtype=np.uint8)
    baseline = float(_kernels.coalition_values(*model._flat(), model.base_score,
                                               instance, background.rows, empty,
                                               proba)[0])
    return Attribution(feature_names=list(model.feature_names), phi=phi,
                       baseline=baseline,
                       prediction=float(_model_output(model, instance, proba)),
                       method=METHOD_SHAP_SAMPLED, stderr=stderr)


def global_importance(attributions):
    """Cohort ranking by mean absolute attribution, descending (ties by
    feature position)."""
    if not attributions:
        raise XaiCrossError("global_importance needs at least one attribution")
    names = list(attributions[0].feature_names)
    for attr in attributions:
        if list(attr.feature_names) != names:
            raise XaiCrossError("attributions must share one feature vocabulary")
    mean_abs = np.mean([np.abs(a.phi) for a in attributions], axis=0)
    order = sorted(range(len(names)), key=lambda i: (-mean_abs[i], i))
    return [(names[i], float(mean_abs[i])) for i in order]


SummaryPoint = namedtuple("SummaryPoint",
                          ["feature", "instance", "phi", "feature_value",
                           "value_percentile"])


def summary_data(attributions, matrix):
    """Long-format beeswarm data: one record per (feature, instance).

    ``value_percentile`` is the mid-rank percentile of the feature value
    within its column; a constant column yields 0.5 everywhere.
    """
    values = matrix.values if hasattr(matrix, "values") else np.asarray(matrix)
    if len(attributions) != values.shape[0]:
        raise XaiCrossError(
            f"{len(attributions)} attributions for {values.shape[0]} matrix rows")
    if not attributions:
        return []
    names = list(attributions[0].feature_names)
    if values.shape[1] != len(names):
        raise XaiCrossError("matrix width does not match the attribution features")

    n = values.shape[0]
    percentiles = np.empty_like(values)
    for j in range(values.shape[1]):
        col = values[:, j]
        sorted_col = np.sort(col)
        less = np.searchsorted(sorted_col, col, side="left")
        upto = np.searchsorted(sorted_col, col, side="right")
        percentiles[:, j] = (less + 0.5 * (upto - less)) / n

    points = []
    for i, attr in enumerate(attributions):
        if list(attr.feature_names) != names:
            raise XaiCrossError("attributions must share one feature vocabulary")
        for j, name in enumerate(names):
            points.append(SummaryPoint(feature=name, instance=i,
                                       phi=float(attr.phi[j]),
                                       feature_value=float(values[i, j]),
                                       value_percentile=float(percentiles[i, j])))
    return points
