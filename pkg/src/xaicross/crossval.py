"""Agreement metrics between two per-instance attributions.

For one instance, features are partitioned by attribution sign and ranked
within each sign group by descending absolute impact (rank 1 = strongest;
ties broken by feature position, zeros excluded from both groups). The two
explanation methods are then compared by

* impact value consistency: the fraction of features whose signs agree
  (zero matches only zero), and
* impact ranking difference: first-method rank minus second-method rank,
  over the sign-consistent nonzero features.

Cohort-level reports aggregate descriptive statistics of both metrics, the
share of ranking differences within [-2, +2], and Spearman rank correlations
over the pooled (rank, rank) pairs per sign group.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import t as student_t

from .attribution import check_same_vocabulary
from .errors import TooFewPairsError, XaiCrossError


@dataclass
class SignedRanking:
    positive: list               # (feature, rank), rank 1 = largest |impact|
    negative: list
    zero: set = field(default_factory=set)

    def rank_of(self, feature, sign):
        table = self.positive if sign > 0 else self.negative
        for name, rank in table:
            if name == feature:
                return rank
        return None


@dataclass
class InstanceAgreement:
    consistency_ratio: float
    ranking_diffs: list          # (feature, first rank - second rank)


@dataclass
class Stats:
    mean: float
    median: float
    std: float
    min: float
    max: float


@dataclass
class CrossValReport:
    consistency: Stats
    ranking_diff: Stats
    frac_diff_within_2: float
    spearman_positive: tuple     # (r, p)
    spearman_negative: tuple
    n_instances: int
    n_positive_pairs: int = 0
    n_negative_pairs: int = 0
    n_diffs: int = 0


def rank_features(attr):
    """Partition features by impact sign and rank by |impact| within group."""
    phi = np.asarray(attr.phi, dtype=np.float64)
    if not np.all(np.isfinite(phi)):
        raise XaiCrossError("attribution impacts must be finite")
    names = list(attr.feature_names)
    pos = [i for i in range(len(names)) if phi[i] > 0]
    neg = [i for i in range(len(names)) if phi[i] < 0]
    pos.sort(key=lambda i: (-abs(phi[i]), i))
    neg.sort(key=lambda i: (-abs(phi[i]), i))
    return SignedRanking(
        positive=[(names[i], r + 1) for r, i in enumerate(pos)],
        negative=[(names[i], r + 1) for r, i in enumerate(neg)],
        zero={names[i] for i in range(len(names)) if phi[i] == 0},
    )


def _sign(x):
    return int(x > 0) - int(x < 0)


def impact_consistency(first, second, features=None):
    """Fraction of features whose impact signs agree in the two attributions.

    ``features`` optionally restricts the comparison (e.g. to the features the
    model actually splits on); the default denominator is every feature.
    """
    check_same_vocabulary(first, second)
    names = list(first.feature_names)
    if features is None:
        indices = range(len(names))
    else:
        wanted = set(features)
        unknown = wanted - set(names)
        if unknown:
            raise XaiCrossError(f"unknown features in restriction: {sorted(unknown)}")
        indices = [i for i, n in enumerate(names) if n in wanted]
    indices = list(indices)
    if not indices:
        raise XaiCrossError("no features to compare")
    same = sum(1 for i in indices if _sign(first.phi[i]) == _sign(second.phi[i]))
    return same / len(indices)


def ranking_differences(first, second):
    """(feature, rank difference) for each sign-consistent nonzero feature."""
    check_same_vocabulary(first, second)
    ranking_a = rank_features(first)
    ranking_b = rank_features(second)
    diffs = []
    for i, name in enumerate(first.feature_names):
        sign = _sign(first.phi[i])
        if sign == 0 or sign != _sign(second.phi[i]):
            continue
        diffs.append((name, ranking_a.rank_of(name, sign) - ranking_b.rank_of(name, sign)))
    return diffs


def _average_ranks(x):
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float((a * a).sum()) * float((b * b).sum()))
    if denom == 0.0:
        return None
    return float((a * b).sum()) / denom


def spearman(ranks_a, ranks_b, exact=False):
    """Spearman correlation with average-rank ties and a two-sided p-value.

    The p-value uses the t approximation ``t = r sqrt((n-2)/(1-r^2))``;
    ``exact=True`` switches to the full permutation null (n <= 10 only).
    Zero-variance input yields the explicit degenerate result (nan, nan).
    """
    a = np.asarray(ranks_a, dtype=np.float64)
    b = np.asarray(ranks_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise XaiCrossError("inputs must be equal-length 1-D sequences")
    n = len(a)
    if n < 3:
        raise TooFewPairsError("spearman needs at least 3 pairs")
    ra, rb = _average_ranks(a), _average_ranks(b)
    r = _pearson(ra, rb)
    if r is None:
        return (float("nan"), float("nan"))
    r = max(-1.0, min(1.0, r))
    if exact:
        return (r, _exact_p(ra, rb, r))
    if abs(r) == 1.0:
        return (r, 0.0)
    t_stat = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(student_t.sf(abs(t_stat), n - 2))
    return (r, min(p, 1.0))


def _exact_p(ra, rb, r_obs, max_n=10):
    n = len(ra)
    if n > max_n:
        raise XaiCrossError(f"exact spearman p is limited to n <= {max_n}")
    count = 0
    total = 0
    chunk = []
    ra_c = ra - ra.mean()
    denom_a = float((ra_c * ra_c).sum())

    def flush(block):
        nonlocal count
        perms = np.array(block)
        pc = perms - perms.mean(axis=1, keepdims=True)
        denom = np.sqrt(denom_a * (pc * pc).sum(axis=1))
        rs = (pc * ra_c).sum(axis=1) / denom
        count += int((np.abs(rs) >= abs(r_obs) - 1e-12).sum())

    for perm in itertools.permutations(rb):
        chunk.append(perm)
        total += 1
        if len(chunk) == 100_000:
            flush(chunk)
            chunk = []
    if chunk:
        flush(chunk)
    return count / total


def instance_agreement(first, second, features=None):
    return InstanceAgreement(
        consistency_ratio=impact_consistency(first, second, features=features),
        ranking_diffs=ranking_differences(first, second))


def _describe(values, ddof=1):
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        nan = float("nan")
        return Stats(nan, nan, nan, nan, nan)
    std = 0.0 if arr.size < 2 else float(arr.std(ddof=ddof))
    return Stats(mean=float(arr.mean()), median=float(np.median(arr)),
                 std=std, min=float(arr.min()), max=float(arr.max()))


def _pooled_spearman(pairs):
    if len(pairs) < 3:
        return (float("nan"), float("nan")), len(pairs)
    a = [p[0] for p in pairs]
    b = [p[1] for p in pairs]
    return spearman(a, b), len(pairs)


def cohort_crossval(instances, features=None, ddof=1):
    """Aggregate agreement metrics over (first, second) attribution pairs.

    Ranking differences are pooled across instances; Spearman correlations
    are computed on the pooled (first rank, second rank) pairs, separately
    for positive-impact and negative-impact features.
    """
    if not instances:
        raise XaiCrossError("cohort_crossval needs at least one instance pair")
    ratios = []
    all_diffs = []
    pos_pairs = []
    neg_pairs = []
    for first, second in instances:
        ratios.append(impact_consistency(first, second, features=features))
        all_diffs.extend(d for _, d in ranking_differences(first, second))
        ranking_a = rank_features(first)
        ranking_b = rank_features(second)
        for i, name in enumerate(first.feature_names):
            sign = _sign(first.phi[i])
            if sign == 0 or sign != _sign(second.phi[i]):
                continue
            pair = (ranking_a.rank_of(name, sign), ranking_b.rank_of(name, sign))
            (pos_pairs if sign > 0 else neg_pairs).append(pair)

    diffs = np.asarray(all_diffs, dtype=np.float64)
    frac = float(((diffs >= -2) & (diffs <= 2)).mean()) if diffs.size else float("nan")
    sp_pos, n_pos = _pooled_spearman(pos_pairs)
    sp_neg, n_neg = _pooled_spearman(neg_pairs)
    return CrossValReport(
        consistency=_describe(ratios, ddof=ddof),
        ranking_diff=_describe(all_diffs, ddof=ddof),
        frac_diff_within_2=frac,
        spearman_positive=sp_pos,
        spearman_negative=sp_neg,
        n_instances=len(instances),
        n_positive_pairs=n_pos,
        n_negative_pairs=n_neg,
        n_diffs=len(all_diffs),
    )


def per_instance_spearman(instances):
    """Diagnostic: per-instance (positive-group r, negative-group r); NaN when
    a group has fewer than 3 sign-consistent features."""
    out = []
    for first, second in instances:
        ranking_a = rank_features(first)
        ranking_b = rank_features(second)
        rs = []
        for sign in (1, -1):
            pairs = []
            for i, name in enumerate(first.feature_names):
                s = _sign(first.phi[i])
                if s == sign and s == _sign(second.phi[i]):
                    pairs.append((ranking_a.rank_of(name, sign),
                                  ranking_b.rank_of(name, sign)))
            (r, _), _n = _pooled_spearman(pairs)
            rs.append(r)
        out.append(tuple(rs))
    return out


def _fmt(x, digits=3):
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.{digits}f}"


def render_crossval_report(report):
    """Fixed-width text layout: one row per metric, then correlation lines."""
    header = f"{'':38s}{'Mean':>9s}{'Median':>9s}{'Std':>9s}{'Min':>9s}{'Max':>9s}"
    rows = [
        ("Ratio of Impact Value Consistency", report.consistency),
        ("Impact Ranking Difference", report.ranking_diff),
    ]
    lines = [header]
    for label, stats in rows:
        lines.append(f"{label:38s}"
                     f"{_fmt(stats.mean):>9s}{_fmt(stats.median):>9s}"
                     f"{_fmt(stats.std):>9s}{_fmt(stats.min):>9s}{_fmt(stats.max):>9s}")
    lines.append("")
    pct = report.frac_diff_within_2
    pct_text = "nan" if math.isnan(pct) else f"{100.0 * pct:.1f}%"
    lines.append(f"Ranking differences within [-2, +2]: {pct_text} "
                 f"(of {report.n_diffs})")
    r, p = report.spearman_positive
    lines.append(f"Spearman, positive-impact features: r = {_fmt(r, 2)}, "
                 f"p = {_fmt(p, 2)} (n = {report.n_positive_pairs})")
    r, p = report.spearman_negative
    lines.append(f"Spearman, negative-impact features: r = {_fmt(r, 2)}, "
                 f"p = {_fmt(p, 2)} (n = {report.n_negative_pairs})")
    lines.append(f"Instances: {report.n_instances}")
    return "\n".join(lines) + "\n"


def crossval_report_rows(report):
    """Machine-readable (metric, statistic, value) rows for CSV export."""
    rows = []
    for metric, stats in (("impact_value_consistency", report.consistency),
                          ("impact_ranking_difference", report.ranking_diff)):
        for stat in ("mean", "median", "std", "min", "max"):
            rows.append((metric, stat, getattr(stats, stat)))
    rows.append(("impact_ranking_difference", "frac_within_2", report.frac_diff_within_2))
    rows.append(("spearman_positive", "r", report.spearman_positive[0]))
    rows.append(("spearman_positive", "p", report.spearman_positive[1]))
    rows.append(("spearman_positive", "n_pairs", float(report.n_positive_pairs)))
    rows.append(("spearman_negative", "r", report.spearman_negative[0]))
    rows.append(("spearman_negative", "p", report.spearman_negative[1]))
    rows.append(("spearman_negative", "n_pairs", float(report.n_negative_pairs)))
    rows.append(("cohort", "n_instances", float(report.n_instances)))
    return rows
