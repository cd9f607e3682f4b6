"""Gradient-boosted regression trees with a logistic objective.

Each boosting round fits one tree to the class-weighted gradients
``g_i = w_i * (p_i - y_i)`` and hessians ``h_i = w_i * p_i * (1 - p_i)``
(``w_i = scale_pos_weight`` for positives, else 1), using exact greedy split
search over sorted unique values with the second-order gain

    gain = 1/2 * [ GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda) ]

and leaf values ``-G/(H+lambda)`` scaled by the learning rate. Routing is
``x[feature] < threshold -> left``. Training is single-threaded and fully
deterministic; a trained model is immutable and safe for concurrent
prediction.

The model file format is versioned JSON (UTF-8 bytes). Floats are written
with ``repr`` so a serialize/deserialize round trip reproduces predictions
bit-exactly. See README for the field-by-field layout.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    CorruptModelError,
    DegenerateLabelsError,
    DimensionMismatchError,
    ModelVersionError,
    NonFiniteError,
    SchemaError,
    TooFewRowsError,
)

FORMAT_TAG = "xaicross.gbt"
FORMAT_VERSION = 1

_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.1
    max_depth: int = 5
    n_estimators: int = 10
    scale_pos_weight: float = 1.0
    min_child_weight: float = 1.0
    lambda_l2: float = 1.0
    base_score: float = None  # None: log-odds of the weighted training prevalence

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise SchemaError("learning_rate must be positive")
        if self.max_depth < 1:
            raise SchemaError("max_depth must be a positive integer")
        if self.n_estimators < 0:
            raise SchemaError("n_estimators must be >= 0")
        if self.scale_pos_weight <= 0:
            raise SchemaError("scale_pos_weight must be positive")
        if self.min_child_weight < 0 or self.lambda_l2 < 0:
            raise SchemaError("min_child_weight and lambda_l2 must be non-negative")

    def to_dict(self):
        return {
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "n_estimators": self.n_estimators,
            "scale_pos_weight": self.scale_pos_weight,
            "min_child_weight": self.min_child_weight,
            "lambda_l2": self.lambda_l2,
            "base_score": self.base_score,
        }


@dataclass
class RegressionTree:
    """Flat node arrays; ``feature == -1`` marks a leaf, child indices are
    positions within the same tree."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        self.feature = np.asarray(self.feature, dtype=np.int32)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int32)
        self.right = np.asarray(self.right, dtype=np.int32)
        self.value = np.asarray(self.value, dtype=np.float64)

    @property
    def n_nodes(self):
        return len(self.feature)

    def depth(self):
        def walk(node):
            if self.feature[node] < 0:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))
        return walk(0)

    def split_features(self):
        return set(int(f) for f in self.feature if f >= 0)


@dataclass
class BoostedTreesModel:
    trees: list
    hyperparams: Hyperparams
    feature_names: list
    base_score: float
    train_loss: list = field(default_factory=list)
    version: int = FORMAT_VERSION

    def __post_init__(self):
        self._flat_cache = None

    @property
    def n_features(self):
        return len(self.feature_names)

    def used_features(self):
        used = set()
        for tree in self.trees:
            used |= tree.split_features()
        return used

    def _flat(self):
        if self._flat_cache is None:
            feats, thrs, lefts, rights, vals, roots = [], [], [], [], [], []
            offset = 0
            for tree in self.trees:
                roots.append(offset)
                feats.append(tree.feature)
                thrs.append(tree.threshold)
                lefts.append(tree.left + offset)
                rights.append(tree.right + offset)
                vals.append(tree.value)
                offset += tree.n_nodes
            if self.trees:
                self._flat_cache = (
                    np.concatenate(feats).astype(np.int32),
                    np.concatenate(thrs),
                    np.concatenate(lefts).astype(np.int32),
                    np.concatenate(rights).astype(np.int32),
                    np.concatenate(vals),
                    np.array(roots, dtype=np.int32),
                )
            else:
                self._flat_cache = (
                    np.zeros(0, np.int32), np.zeros(0), np.zeros(0, np.int32),
                    np.zeros(0, np.int32), np.zeros(0), np.zeros(0, np.int32),
                )
        return self._flat_cache

    def _as_matrix(self, X):
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionMismatchError(
                f"expected {self.n_features} features, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise NonFiniteError("prediction input must be finite")
        return X, single

    def predict_raw(self, X):
        X, single = self._as_matrix(X)
        out = _kernels.predict_raw(*self._flat(), self.base_score, X)
        return float(out[0]) if single else out

    def predict_proba(self, X):
        raw = self.predict_raw(X)
        if np.isscalar(raw):
            return float(_kernels.sigmoid(np.array([raw]))[0])
        return _kernels.sigmoid(raw)

    def predict_label(self, X, threshold=0.5):
        proba = self.predict_proba(X)
        if np.isscalar(proba):
            return int(proba >= threshold)
        return (proba >= threshold).astype(np.int8)


def compute_scale_pos_weight(labels):
    """sqrt(#negative / #positive) class reweighting factor."""
    labels = np.asarray(labels)
    pos = int((labels == 1).sum())
    neg = int((labels == 0).sum())
    if pos == 0 or neg == 0:
        raise DegenerateLabelsError("need at least one positive and one negative label")
    return math.sqrt(neg / pos)


def _best_split(X, g, h, idx, lam, min_child_weight, G, H, parent_score):
    best_gain = _MIN_GAIN
    best = None
    for f in range(X.shape[1]):
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        if vs[0] == vs[-1]:
            continue
        Gc = np.cumsum(g[idx][order])
        Hc = np.cumsum(h[idx][order])
        cut = np.nonzero(vs[:-1] < vs[1:])[0]
        GL, HL = Gc[cut], Hc[cut]
        GR, HR = G - GL, H - HL
        gains = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent_score)
        gains[(HL < min_child_weight) | (HR < min_child_weight)] = -np.inf
        k = int(np.argmax(gains))
        if gains[k] > best_gain:
            best_gain = gains[k]
            best = (f, 0.5 * (vs[cut[k]] + vs[cut[k] + 1]))
    return best


def _fit_tree(X, g, h, hp):
    feature, threshold, left, right, value = [], [], [], [], []
    lam = hp.lambda_l2

    def grow(idx, depth):
        G = float(g[idx].sum())
        H = float(h[idx].sum())
        best = None
        if depth < hp.max_depth and len(idx) >= 2:
            best = _best_split(X, g, h, idx, lam, hp.min_child_weight,
                               G, H, G * G / (H + lam))
        node = len(feature)
        if best is None:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(-G / (H + lam) * hp.learning_rate)
            return node
        f, thr = best
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        mask = X[idx, f] < thr
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return RegressionTree(feature=feature, threshold=threshold,
                          left=left, right=right, value=value)


def _weighted_logloss(raw, y, w):
    # -y log p - (1-y) log(1-p) == softplus(raw) - y*raw, numerically stable
    softplus = np.where(raw > 0, raw + np.log1p(np.exp(-raw)), np.log1p(np.exp(raw)))
    return float((w * (softplus - y * raw)).sum() / w.sum())


def train(data, hp, seed=0):
    """Fit ``hp.n_estimators`` boosting rounds on an encoded matrix with labels.

    Deterministic for fixed (data, hp, seed); the seed is accepted for
    interface stability but exact greedy training draws nothing random.
    ``model.train_loss[t]`` is the weighted training log-loss after ``t``
    rounds (index 0 is the base-score-only loss).
    """
    if data.labels is None:
        raise SchemaError("training data must include labels")
    X = np.asarray(data.values, dtype=np.float64)
    y = data.labels.astype(np.float64)
    if X.shape[0] < 2:
        raise TooFewRowsError("need at least 2 training rows")
    if not np.all(np.isfinite(X)):
        raise NonFiniteError("training features must be finite")
    pos = float((y == 1).sum())
    neg = float((y == 0).sum())
    if pos == 0 or neg == 0:
        raise DegenerateLabelsError("training labels must include both classes")

    w = np.where(y == 1, hp.scale_pos_weight, 1.0)
    if hp.base_score is not None:
        base = float(hp.base_score)
    else:
        base = math.log(hp.scale_pos_weight * pos / neg)

    raw = np.full(X.shape[0], base, dtype=np.float64)
    trees = []
    losses = [_weighted_logloss(raw, y, w)]
    for _ in range(hp.n_estimators):
        p = _kernels.sigmoid(raw)
        g = w * (p - y)
        h = w * p * (1.0 - p)
        tree = _fit_tree(X, g, h, hp)
        trees.append(tree)
        raw = raw + _kernels.predict_raw(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value,
            np.array([0], dtype=np.int32), 0.0, X)
        losses.append(_weighted_logloss(raw, y, w))

    return BoostedTreesModel(trees=trees, hyperparams=hp,
                             feature_names=list(data.feature_names),
                             base_score=base, train_loss=losses)


def serialize(model):
    payload = {
        "format": FORMAT_TAG,
        "version": model.version,
        "hyperparams": model.hyperparams.to_dict(),
        "feature_names": list(model.feature_names),
        "base_score": model.base_score,
        "train_loss": list(model.train_loss),
        "trees": [
            {
                "feature": tree.feature.tolist(),
                "threshold": tree.threshold.tolist(),
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "value": tree.value.tolist(),
            }
            for tree in model.trees
        ],
    }
    return json.dumps(payload, sort_keys=True).encode("utf-8")


def deserialize(blob):
    try:
        payload = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModelError(f"unreadable model payload: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != FORMAT_TAG:
        raise CorruptModelError("not a boosted-trees model payload")
    version = payload.get("version")
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"payload version {version!r}, this build reads version {FORMAT_VERSION}")
    try:
        hp = Hyperparams(**payload["hyperparams"])
        trees = [
            RegressionTree(feature=t["feature"], threshold=t["threshold"],
                           left=t["left"], right=t["right"], value=t["value"])
            for t in payload["trees"]
        ]
        model = BoostedTreesModel(trees=trees, hyperparams=hp,
                                  feature_names=list(payload["feature_names"]),
                                  base_score=float(payload["base_score"]),
                                  train_loss=list(payload.get("train_loss", [])),
                                  version=version)
    except (KeyError, TypeError) as exc:
        raise CorruptModelError(f"malformed model payload: {exc}") from exc
    return model
