"""Evaluation and visualization artifacts.

Covers the binary classification report (text layout: class 0, class 1,
accuracy, macro avg, weighted avg; two decimals), side-by-side local
attribution comparisons, and plot-data exports. Every export is CSV first;
plots are rendered as small self-contained SVG files with deterministic
layout so identical payloads produce byte-identical images. File writes go
through write-temp-then-rename.

Zero-division conventions: a class never predicted has precision 0, a class
without true members has recall 0, and f1 is 0 when precision + recall is 0.
"""

import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .crossval import rank_features, _sign
from .errors import XaiCrossError


def atomic_write_text(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def atomic_write_bytes(path, blob):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class ClassificationReport:
    per_class: dict              # class label -> ClassMetrics
    accuracy: float
    macro_avg: ClassMetrics
    weighted_avg: ClassMetrics
    total: int


def _prf(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def classification_report(y_true, y_pred):
    y_true = np.asarray(y_true).astype(np.int64)
    y_pred = np.asarray(y_pred).astype(np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or len(y_true) < 1:
        raise XaiCrossError("y_true and y_pred must be equal-length non-empty vectors")
    total = len(y_true)
    per_class = {}
    for cls in (0, 1):
        tp = int(((y_pred == cls) & (y_true == cls)).sum())
        fp = int(((y_pred == cls) & (y_true != cls)).sum())
        fn = int(((y_pred != cls) & (y_true == cls)).sum())
        precision, recall, f1 = _prf(tp, fp, fn)
        per_class[cls] = ClassMetrics(precision, recall, f1, support=tp + fn)
    accuracy = float((y_true == y_pred).sum() / total)
    macro = ClassMetrics(
        precision=sum(m.precision for m in per_class.values()) / 2,
        recall=sum(m.recall for m in per_class.values()) / 2,
        f1=sum(m.f1 for m in per_class.values()) / 2,
        support=total)
    weighted = ClassMetrics(
        precision=sum(m.precision * m.support for m in per_class.values()) / total,
        recall=sum(m.recall * m.support for m in per_class.values()) / total,
        f1=sum(m.f1 * m.support for m in per_class.values()) / total,
        support=total)
    return ClassificationReport(per_class=per_class, accuracy=accuracy,
                                macro_avg=macro, weighted_avg=weighted, total=total)


def render_classification_report(report):
    lines = [f"{'':16s}{'Precision':>10s}{'Recall':>10s}{'F1 Score':>10s}{'Support':>10s}"]
    for cls in (0, 1):
        m = report.per_class[cls]
        lines.append(f"{cls:<16d}{m.precision:>10.2f}{m.recall:>10.2f}"
                     f"{m.f1:>10.2f}{m.support:>10d}")
    lines.append(f"{'Accuracy':16s}{'':10s}{'':10s}"
                 f"{report.accuracy:>10.2f}{report.total:>10d}")
    for label, m in (("Macro Avg", report.macro_avg),
                     ("Weighted Avg", report.weighted_avg)):
        lines.append(f"{label:16s}{m.precision:>10.2f}{m.recall:>10.2f}"
                     f"{m.f1:>10.2f}{m.support:>10d}")
    return "\n".join(lines) + "\n"


def classification_report_rows(report):
    rows = []
    for cls in (0, 1):
        m = report.per_class[cls]
        rows.append((str(cls), m.precision, m.recall, m.f1, m.support))
    rows.append(("accuracy", "", "", report.accuracy, report.total))
    rows.append(("macro_avg", report.macro_avg.precision, report.macro_avg.recall,
                 report.macro_avg.f1, report.macro_avg.support))
    rows.append(("weighted_avg", report.weighted_avg.precision, report.weighted_avg.recall,
                 report.weighted_avg.f1, report.weighted_avg.support))
    return rows


LOCAL_COMPARISON_COLUMNS = ["feature", "raw_value", "shap_phi", "shap_sign",
                            "shap_rank", "lime_weight", "lime_sign", "lime_rank",
                            "sign_match"]


def export_local_comparison(shap_attr, lime_attr, raw_values, path):
    """Side-by-side per-feature table for one instance, sorted by |shap_phi|.

    ``raw_values`` aligns one display value with each encoded feature.
    Rank cells are within-sign ranks ('' for zero-impact features).
    """
    if list(shap_attr.feature_names) != list(lime_attr.feature_names):
        raise XaiCrossError("attributions do not share a feature vocabulary")
    names = list(shap_attr.feature_names)
    if len(raw_values) != len(names):
        raise XaiCrossError("raw_values must align with the encoded features")
    shap_ranks = rank_features(shap_attr)
    lime_ranks = rank_features(lime_attr)
    order = sorted(range(len(names)), key=lambda i: (-abs(shap_attr.phi[i]), i))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOCAL_COMPARISON_COLUMNS)
    for i in order:
        s_sign = _sign(shap_attr.phi[i])
        l_sign = _sign(lime_attr.phi[i])
        s_rank = shap_ranks.rank_of(names[i], s_sign) if s_sign else ""
        l_rank = lime_ranks.rank_of(names[i], l_sign) if l_sign else ""
        writer.writerow([names[i], raw_values[i], repr(float(shap_attr.phi[i])),
                         s_sign, s_rank, repr(float(lime_attr.phi[i])), l_sign,
                         l_rank, int(s_sign == l_sign)])
    atomic_write_text(path, buf.getvalue())


def read_local_comparison(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != LOCAL_COMPARISON_COLUMNS:
            raise XaiCrossError(f"unexpected local-comparison header: {header}")
        return [row for row in reader]


PLOT_KINDS = ("importance", "summary", "local")

_CSV_HEADERS = {
    "importance": ["feature", "mean_abs_impact"],
    "summary": ["feature", "instance", "phi", "feature_value", "value_percentile"],
    "local": ["feature", "phi"],
}


def _svg_header(width, height):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n')


def _bar_color(value):
    return "#d62728" if value >= 0 else "#1f77b4"


def _percentile_color(p):
    # blue (low value) to red (high value)
    lo = (31, 119, 180)
    hi = (214, 39, 40)
    rgb = tuple(round(a + (b - a) * p) for a, b in zip(lo, hi))
    return f"#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"


def _svg_bars(pairs, signed):
    rows = len(pairs)
    width, row_h, label_w = 640, 22, 220
    height = 40 + rows * row_h
    plot_w = width - label_w - 20
    largest = max(abs(v) for _, v in pairs)
    scale = (plot_w / 2 if signed else plot_w) / largest if largest > 0 else 0.0
    x_zero = label_w + (plot_w / 2 if signed else 0)
    parts = [_svg_header(width, height)]
    parts.append(f'<line x1="{x_zero:.1f}" y1="20" x2="{x_zero:.1f}" '
                 f'y2="{height - 20}" stroke="#888" stroke-width="1"/>\n')
    for k, (name, value) in enumerate(pairs):
        y = 30 + k * row_h
        length = abs(value) * scale
        x = x_zero - length if (signed and value < 0) else x_zero
        parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{length:.2f}" '
                     f'height="{row_h - 8}" fill="{_bar_color(value if signed else 1)}"/>\n')
        parts.append(f'<text x="{label_w - 6}" y="{y + row_h - 12}" text-anchor="end" '
                     f'font-family="monospace" font-size="11">{name}</text>\n')
        parts.append(f'<text x="{x_zero + (length + 4 if value >= 0 else -length - 4):.2f}" '
                     f'y="{y + row_h - 12}" '
                     f'text-anchor="{"start" if value >= 0 else "end"}" '
                     f'font-family="monospace" font-size="10">{value:.4f}</text>\n')
    parts.append("</svg>\n")
    return "".join(parts)


def _svg_summary(points):
    features = []
    for pt in points:
        if pt.feature not in features:
            features.append(pt.feature)
    rows = len(features)
    width, row_h, label_w = 640, 26, 220
    height = 40 + rows * row_h
    plot_w = width - label_w - 30
    largest = max(abs(pt.phi) for pt in points)
    scale = (plot_w / 2) / largest if largest > 0 else 0.0
    x_zero = label_w + plot_w / 2
    row_of = {name: k for k, name in enumerate(features)}
    parts = [_svg_header(width, height)]
    parts.append(f'<line x1="{x_zero:.1f}" y1="20" x2="{x_zero:.1f}" '
                 f'y2="{height - 20}" stroke="#888" stroke-width="1"/>\n')
    for name in features:
        y = 30 + row_of[name] * row_h + row_h / 2
        parts.append(f'<text x="{label_w - 6}" y="{y + 4:.1f}" text-anchor="end" '
                     f'font-family="monospace" font-size="11">{name}</text>\n')
    for pt in points:
        cx = x_zero + pt.phi * scale
        # deterministic vertical spread from the value percentile
        cy = 30 + row_of[pt.feature] * row_h + row_h / 2 + (pt.value_percentile - 0.5) * (row_h - 10)
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="2.2" '
                     f'fill="{_percentile_color(pt.value_percentile)}" fill-opacity="0.75"/>\n')
    parts.append("</svg>\n")
    return "".join(parts)


def export_plot_data(kind, payload, csv_path, svg_path=None):
    """Write plot data as CSV; optionally render the matching SVG.

    kinds: ``importance`` ((feature, mean |impact|) pairs, descending bars),
    ``summary`` (SummaryPoint records, one strip per feature), ``local``
    ((feature, phi) pairs, signed bars sorted by |phi|). An empty payload
    writes the CSV header only and no image.
    """
    if kind not in PLOT_KINDS:
        raise XaiCrossError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    payload = list(payload)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_HEADERS[kind])
    if kind == "summary":
        for pt in payload:
            writer.writerow([pt.feature, pt.instance, repr(pt.phi),
                             repr(pt.feature_value), repr(pt.value_percentile)])
    else:
        for name, value in payload:
            writer.writerow([name, repr(float(value))])
    atomic_write_text(csv_path, buf.getvalue())

    if not payload or svg_path is None:
        return
    if kind == "importance":
        svg = _svg_bars(payload, signed=False)
    elif kind == "local":
        pairs = sorted(payload, key=lambda kv: -abs(kv[1]))
        svg = _svg_bars(pairs, signed=True)
    else:
        svg = _svg_summary(payload)
    atomic_write_text(svg_path, svg)
