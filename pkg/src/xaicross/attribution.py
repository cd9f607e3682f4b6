"""Per-instance attribution records shared by the SHAP and LIME explainers.

Exports use one record per (instance, feature) with the columns
``instance, feature, phi, baseline, prediction, method``, as line-delimited
JSON (one object per line) or CSV. Readers rebuild attribution vectors in
the original feature order.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import VocabularyMismatchError, XaiCrossError

METHOD_SHAP_EXACT = "shap-exact"
METHOD_SHAP_SAMPLED = "shap-sampled"
METHOD_LIME = "lime"


@dataclass
class Attribution:
    """Signed per-feature impact values for one explained prediction."""

    feature_names: list
    phi: np.ndarray
    baseline: float
    prediction: float
    method: str
    stderr: np.ndarray = None

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.phi.shape != (len(self.feature_names),):
            raise XaiCrossError("phi length must equal the feature count")
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=np.float64)
            if self.stderr.shape != self.phi.shape:
                raise XaiCrossError("stderr length must equal the feature count")

    def efficiency_gap(self):
        """prediction - (baseline + sum(phi)); ~0 for exact Shapley."""
        return float(self.prediction - (self.baseline + self.phi.sum()))


def check_same_vocabulary(a, b):
    if list(a.feature_names) != list(b.feature_names):
        raise VocabularyMismatchError(
            "attributions do not share a feature vocabulary")


def _records(items):
    for instance_id, attr in items:
        for name, phi in zip(attr.feature_names, attr.phi):
            yield {
                "instance": instance_id,
                "feature": name,
                "phi": float(phi),
                "baseline": float(attr.baseline),
                "prediction": float(attr.prediction),
                "method": attr.method,
            }


def write_attributions_jsonl(items, path):
    """``items`` is an iterable of (instance_id, Attribution)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in _records(items):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_attributions_csv(items, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance", "feature", "phi", "baseline", "prediction", "method"])
        for rec in _records(items):
            writer.writerow([rec["instance"], rec["feature"], repr(rec["phi"]),
                             repr(rec["baseline"]), repr(rec["prediction"]), rec["method"]])


def read_attributions_jsonl(path):
    """Rebuild [(instance_id, Attribution)] from a JSONL export."""
    groups = {}
    order = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            key = (rec["instance"], rec["method"])
            if key not in groups:
                groups[key] = {"features": [], "phi": [],
                               "baseline": rec["baseline"],
                               "prediction": rec["prediction"]}
                order.append(key)
            groups[key]["features"].append(rec["feature"])
            groups[key]["phi"].append(rec["phi"])
    out = []
    for key in order:
        grp = groups[key]
        out.append((key[0], Attribution(feature_names=grp["features"],
                                        phi=np.array(grp["phi"]),
                                        baseline=grp["baseline"],
                                        prediction=grp["prediction"],
                                        method=key[1])))
    return out
