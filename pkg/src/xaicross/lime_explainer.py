"""Local surrogate explanations.

A neighborhood is sampled around the explained instance: every perturbation
unit (a whole one-hot group, or a single ordinal/numeric feature) is
independently kept with probability 0.5 or redrawn from the training
distribution (a redrawn one-hot group copies the group slice of a random
training row, so the sum-to-1 invariant survives). The binary mask marks
kept (1) vs perturbed (0) encoded features, proximity weights are
``exp(-n_perturbed / width^2)``, and a weighted ridge regression of the model
outputs on the mask yields the local explanation. Numeric features carry a
quartile-bin condition label ("age <= 47" style) for display.

Surrogate weights live on the same encoded-feature vocabulary as the Shapley
attributions, so the two methods can be compared feature by feature.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .attribution import METHOD_LIME, Attribution
from .errors import (
    DimensionMismatchError,
    EmptyTrainingStatsError,
    SchemaError,
    SingularSystemError,
    XaiCrossError,
)


@dataclass(frozen=True)
class SurrogateConfig:
    n_samples: int = 5000
    kernel_width: float = None  # None: 0.75 * sqrt(d)
    max_features: int = None    # None: keep every feature
    ridge_penalty: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 2:
            raise SchemaError("n_samples must be at least 2")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise SchemaError("kernel_width must be positive")
        if self.max_features is not None and self.max_features < 1:
            raise SchemaError("max_features must be >= 1")
        if self.ridge_penalty < 0:
            raise SchemaError("ridge_penalty must be non-negative")

    def width(self, d):
        return self.kernel_width if self.kernel_width is not None else 0.75 * np.sqrt(d)


@dataclass
class TrainingStats:
    """Per-feature marginals the sampler redraws from.

    ``units`` lists encoded-feature index groups perturbed atomically;
    ``values`` keeps the training rows used as the empirical distribution;
    ``numeric_bins`` maps numeric feature indices to their quartile edges.
    """

    feature_names: list
    values: np.ndarray
    units: list
    numeric_bins: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] == 0:
            raise EmptyTrainingStatsError("training stats need at least one row")
        if self.values.shape[1] != len(self.feature_names):
            raise EmptyTrainingStatsError("training stats width mismatch")
        covered = sorted(j for unit in self.units for j in unit)
        if covered != list(range(len(self.feature_names))):
            raise EmptyTrainingStatsError(
                "perturbation units must cover every feature exactly once")

    @classmethod
    def from_matrix(cls, matrix, schema=None, units=None, numeric_features=None):
        values = matrix.values if hasattr(matrix, "values") else np.asarray(matrix)
        names = (list(matrix.feature_names) if hasattr(matrix, "feature_names")
                 else [f"f{j}" for j in range(values.shape[1])])
        if schema is not None:
            units = schema.perturbation_units()
            numeric_features = schema.numeric_feature_indices()
        if units is None:
            units = [[j] for j in range(values.shape[1])]
        bins = {}
        for j in (numeric_features or []):
            bins[int(j)] = np.quantile(values[:, j], [0.25, 0.5, 0.75])
        return cls(feature_names=names, values=values, units=units,
                   numeric_bins=bins)

    def bin_label(self, j, x_value):
        """Quartile condition covering ``x_value`` for numeric feature j."""
        if j not in self.numeric_bins:
            return None
        q1, q2, q3 = self.numeric_bins[j]
        name = self.feature_names[j]
        if x_value <= q1:
            return f"{name} <= {q1:g}"
        if x_value <= q2:
            return f"{q1:g} < {name} <= {q2:g}"
        if x_value <= q3:
            return f"{q2:g} < {name} <= {q3:g}"
        return f"{name} > {q3:g}"


@dataclass
class NeighborhoodSample:
    points: np.ndarray
    binary_mask: np.ndarray
    model_outputs: np.ndarray
    weights: np.ndarray


@dataclass
class LimeExplanation:
    selected_features: list      # (feature name, weight), by descending |weight|
    intercept: float
    local_fit_r2: float
    prediction: float
    feature_names: list = None
    dense_weights: np.ndarray = None   # weight per encoded feature, 0 if unselected
    value_labels: dict = field(default_factory=dict)

    def to_attribution(self):
        return Attribution(feature_names=list(self.feature_names),
                           phi=self.dense_weights, baseline=self.intercept,
                           prediction=self.prediction, method=METHOD_LIME)


def sample_neighborhood(instance, training_stats, cfg, model):
    """Draw the perturbed neighborhood, evaluate the model, weight by proximity.

    Row 0 is always the unperturbed instance (mask all ones, weight exactly 1).
    Deterministic under ``cfg.seed``.
    """
    instance = np.asarray(instance, dtype=np.float64)
    d = len(training_stats.feature_names)
    if instance.shape != (d,):
        raise DimensionMismatchError(f"instance must have {d} features")
    if model.n_features != d:
        raise DimensionMismatchError("model and training stats disagree on width")
    n = cfg.n_samples
    if n < d + 2:
        raise SchemaError(f"n_samples must be >= d+2 = {d + 2}")

    rng = np.random.default_rng(cfg.seed)
    points = np.tile(instance, (n, 1))
    mask = np.ones((n, d), dtype=np.uint8)
    n_train = training_stats.values.shape[0]
    for unit in training_stats.units:
        keep = rng.random(n - 1) < 0.5
        pick = rng.integers(0, n_train, size=n - 1)
        perturbed = np.nonzero(~keep)[0] + 1
        cols = np.asarray(unit)
        points[perturbed[:, None], cols[None, :]] = \
            training_stats.values[pick[~keep][:, None], cols[None, :]]
        mask[perturbed[:, None], cols[None, :]] = 0

    outputs = _kernels.sigmoid(
        _kernels.predict_raw(*model._flat(), model.base_score, points))
    width = cfg.width(d)
    n_perturbed = (mask == 0).sum(axis=1)
    weights = np.exp(-n_perturbed / (width * width))
    return NeighborhoodSample(points=points, binary_mask=mask,
                              model_outputs=outputs, weights=weights)


def _weighted_ridge(X, y, w, alpha):
    # Intercept column unpenalized. The penalty is scaled by the total sample
    # weight, so the fit is invariant under rescaling all weights and under
    # duplicating rows with proportionally reduced weights.
    A = np.column_stack([np.ones(len(y)), X])
    WA = A * w[:, None]
    lhs = A.T @ WA
    lhs[1:, 1:] += alpha * float(w.sum()) * np.eye(X.shape[1])
    rhs = A.T @ (w * y)
    try:
        beta = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "weighted least squares system is singular; sampling is degenerate") from exc
    return beta[0], beta[1:]


def _weighted_r2(y, yhat, w):
    if float(np.ptp(y)) == 0.0:
        return 1.0   # constant target: the fit is trivially perfect
    ybar = float((w * y).sum() / w.sum())
    ss_tot = float((w * (y - ybar) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0
    ss_res = float((w * (y - yhat) ** 2).sum())
    return min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)


def _forward_select(X, y, w, alpha, k):
    d = X.shape[1]
    selected = []
    remaining = list(range(d))
    wsum = w.sum()
    for _ in range(min(k, d)):
        if selected:
            intercept, beta = _weighted_ridge(X[:, selected], y, w, alpha)
            resid = y - (intercept + X[:, selected] @ beta)
        else:
            resid = y - float((w * y).sum() / wsum)
        best_j, best_score = None, -1.0
        rbar = float((w * resid).sum() / wsum)
        rvar = float((w * (resid - rbar) ** 2).sum())
        for j in remaining:
            col = X[:, j]
            cbar = float((w * col).sum() / wsum)
            cvar = float((w * (col - cbar) ** 2).sum())
            if cvar <= 0.0 or rvar <= 0.0:
                score = 0.0
            else:
                cov = float((w * (col - cbar) * (resid - rbar)).sum())
                score = abs(cov) / np.sqrt(cvar * rvar)
            if score > best_score:
                best_score, best_j = score, j
        selected.append(best_j)
        remaining.remove(best_j)
    return sorted(selected)


def fit_surrogate(sample, cfg, feature_names=None):
    """Weighted ridge fit of model outputs on the keep/perturb mask.

    With ``cfg.max_features`` below the feature count, features enter by
    forward selection on weighted residual correlation before the final refit.
    """
    X = sample.binary_mask.astype(np.float64)
    y = np.asarray(sample.model_outputs, dtype=np.float64)
    w = np.asarray(sample.weights, dtype=np.float64)
    n, d = X.shape
    if n < d + 2:
        raise SchemaError("surrogate fit needs at least d+2 sample rows")
    if np.any(w <= 0):
        raise XaiCrossError("proximity weights must be positive")
    names = feature_names if feature_names is not None else [f"f{j}" for j in range(d)]

    k = cfg.max_features if cfg.max_features is not None else d
    if k > d:
        raise SchemaError("max_features cannot exceed the feature count")
    selected = list(range(d)) if k >= d else _forward_select(X, y, w, cfg.ridge_penalty, k)

    intercept, beta = _weighted_ridge(X[:, selected], y, w, cfg.ridge_penalty)
    yhat = intercept + X[:, selected] @ beta
    r2 = _weighted_r2(y, yhat, w)

    dense = np.zeros(d, dtype=np.float64)
    dense[selected] = beta
    order = sorted(selected, key=lambda j: (-abs(dense[j]), j))
    pairs = [(names[j], float(dense[j])) for j in order]
    return LimeExplanation(selected_features=pairs, intercept=float(intercept),
                           local_fit_r2=r2, prediction=float(y[0]),
                           feature_names=list(names), dense_weights=dense)


def explain_instance(model, instance, training_stats, cfg):
    """Sample a neighborhood, fit the surrogate, and label numeric bins.

    Positive weights push toward the positive class, matching the Shapley
    sign convention because both explain the same probability output.
    """
    sample = sample_neighborhood(instance, training_stats, cfg, model)
    explanation = fit_surrogate(sample, cfg, feature_names=training_stats.feature_names)
    instance = np.asarray(instance, dtype=np.float64)
    labels = {}
    for j, name in enumerate(training_stats.feature_names):
        bin_label = training_stats.bin_label(j, instance[j])
        labels[name] = bin_label if bin_label is not None else f"{name} = {instance[j]:g}"
    explanation.value_labels = labels
    return explanation
