"""xaicross: boosted-tree cohort classifier with cross-validated explanations.

Train an XGBoost-style gradient-boosted binary classifier on tabular cohort
data, explain individual predictions with exact or sampled Shapley values and
LIME local surrogates, and quantify how well the two explanation methods
agree (sign consistency, within-sign ranking differences, Spearman rank
correlation).
"""

__version__ = "0.1.0"

from .attribution import Attribution
from .crossval import (
    cohort_crossval,
    impact_consistency,
    rank_features,
    ranking_differences,
    spearman,
)
from .gbt import BoostedTreesModel, Hyperparams, compute_scale_pos_weight, train
from .lime_explainer import SurrogateConfig, TrainingStats, explain_instance
from .pipeline import EncodedMatrix, RawTable, encode, filter_complete, load_csv, split
from .report import classification_report
from .schema import ColumnSpec, FeatureSchema, default_schema, load_schema
from .shap_explainer import (
    BackgroundSet,
    exact_shapley,
    global_importance,
    make_background,
    sampled_shapley,
    summary_data,
    value_function,
)
from .synth import generate_synthetic_cohort

__all__ = [
    "Attribution",
    "BackgroundSet",
    "BoostedTreesModel",
    "ColumnSpec",
    "EncodedMatrix",
    "FeatureSchema",
    "Hyperparams",
    "RawTable",
    "SurrogateConfig",
    "TrainingStats",
    "__version__",
    "cohort_crossval",
    "classification_report",
    "compute_scale_pos_weight",
    "default_schema",
    "encode",
    "exact_shapley",
    "explain_instance",
    "filter_complete",
    "generate_synthetic_cohort",
    "global_importance",
    "impact_consistency",
    "load_csv",
    "load_schema",
    "make_background",
    "rank_features",
    "ranking_differences",
    "sampled_shapley",
    "spearman",
    "split",
    "summary_data",
    "train",
    "value_function",
]
