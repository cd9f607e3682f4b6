import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from xaicross import gbt
from xaicross.gbt import BoostedTreesModel, Hyperparams, RegressionTree
from xaicross.pipeline import EncodedMatrix
from xaicross.schema import ColumnSpec, FeatureSchema

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("suite", max_examples=25, deadline=None)
settings.load_profile("suite")


def make_tree(feature, threshold, left, right, value):
    return RegressionTree(feature=feature, threshold=threshold,
                          left=left, right=right, value=value)


def stump(feature_index, threshold, left_value, right_value):
    """Single split: x[feature] < threshold -> left_value else right_value."""
    return make_tree([feature_index, -1, -1], [threshold, 0.0, 0.0],
                     [1, -1, -1], [2, -1, -1], [0.0, left_value, right_value])


def hand_model(trees, n_features, base_score=0.0, names=None):
    return BoostedTreesModel(
        trees=trees, hyperparams=Hyperparams(),
        feature_names=names or [f"f{j}" for j in range(n_features)],
        base_score=base_score)


def random_trained_model(rng, d, n_rows=30, n_estimators=3, max_depth=3):
    X = rng.normal(size=(n_rows, d))
    y = (X @ rng.normal(size=d) + 0.3 * rng.normal(size=n_rows) > 0).astype(np.int8)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    data = EncodedMatrix([f"f{j}" for j in range(d)], X, y)
    hp = Hyperparams(n_estimators=n_estimators, max_depth=max_depth)
    return gbt.train(data, hp), data


@pytest.fixture
def tiny_schema():
    return FeatureSchema(columns=(
        ColumnSpec(name="color", kind="onehot", categories=("red", "green", "blue")),
        ColumnSpec(name="grade", kind="ordinal", categories=("low", "mid", "high")),
        ColumnSpec(name="age", kind="numeric"),
    ), label="mortality")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
