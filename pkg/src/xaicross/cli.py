"""Command-line driver: synth, train, explain, crossval, report.

Every run reads an optional INI config file; explicit command-line flags win
over config values, which win over built-in defaults. All outputs land in the
run's output directory together with ``manifest.json`` recording the
effective configuration, seeds, package and dependency versions, and the
kernel backend; rerunning the same command with the same config and seeds
reproduces every output byte for byte.

Seeding scheme: the master seed drives the synthetic cohort and the split;
per-instance explainer streams are seeded with ``[seed, instance_id, 1]``
(Shapley sampling) and ``[seed, instance_id, 2]`` (LIME) so results do not
depend on scheduling order.
"""

import argparse
import configparser
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy

from . import __version__, _kernels, crossval, gbt, lime_explainer, report, shap_explainer
from .attribution import (
    Attribution,
    write_attributions_csv,
    write_attributions_jsonl,
    read_attributions_jsonl,
)
from .errors import ConfigError, XaiCrossError
from .pipeline import (
    RawTable,
    encode,
    filter_complete,
    load_csv,
    read_encoded_csv,
    split,
    write_encoded_csv,
    write_raw_csv,
)
from .schema import default_schema, dumps_schema, encoded_display_values, load_schema
from .synth import generate_synthetic_cohort

_DEFAULTS = {
    "run": {"seed": "0", "threads": "1"},
    "data": {"csv": "", "schema": "", "test_fraction": "0.2", "stratify": "false"},
    "synth": {"n": "1000", "intercept": "-3.0"},
    "train": {"learning_rate": "0.1", "max_depth": "5", "n_estimators": "10",
              "min_child_weight": "1.0", "lambda_l2": "1.0",
              "base_score": "auto", "scale_pos_weight": "auto"},
    "explain": {"method": "auto", "background_rows": "100",
                "n_permutations": "200", "exact_max_features": "12",
                "output_space": "probability", "consistency_denominator": "all",
                "check_efficiency": "false"},
    "lime": {"n_samples": "5000", "kernel_width": "auto", "max_features": "0",
             "ridge_penalty": "1e-3"},
}

_PAPER_TRAIN_DEFAULTS = {"learning_rate": "0.1", "max_depth": "5",
                         "n_estimators": "10", "scale_pos_weight": "auto"}


class RunConfig:
    """Layered configuration: defaults < config file < CLI flags."""

    def __init__(self, config_path=None, overrides=None, paper_defaults=False):
        self._values = {sec: dict(items) for sec, items in _DEFAULTS.items()}
        self._extra = {}
        if config_path:
            parser = configparser.ConfigParser(interpolation=None)
            try:
                with open(config_path, "r", encoding="utf-8") as fh:
                    parser.read_file(fh)
            except (OSError, configparser.Error) as exc:
                raise ConfigError(f"cannot read config {config_path!r}: {exc}") from exc
            for section in parser.sections():
                for key, value in parser[section].items():
                    self._values.setdefault(section, {})[key] = value
        if paper_defaults:
            self._values["data"]["schema"] = ""
            self._values["train"].update(_PAPER_TRAIN_DEFAULTS)
        for (section, key), value in (overrides or {}).items():
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            self._values.setdefault(section, {})[key] = str(value)

    def raw(self, section, key):
        try:
            return self._values[section][key]
        except KeyError:
            raise ConfigError(f"missing config value [{section}] {key}") from None

    def text(self, section, key):
        return self.raw(section, key).strip()

    def integer(self, section, key):
        try:
            return int(self.text(section, key))
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be an integer") from None

    def number(self, section, key):
        try:
            return float(self.text(section, key))
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be a number") from None

    def flag(self, section, key):
        value = self.text(section, key).lower()
        if value in ("1", "true", "yes", "on"):
            return True
        if value in ("0", "false", "no", "off", ""):
            return False
        raise ConfigError(f"[{section}] {key} must be a boolean")

    def auto_number(self, section, key):
        value = self.text(section, key).lower()
        return None if value in ("auto", "") else self.number(section, key)

    def prefixed(self, section, prefix):
        """All ``<prefix>.<name> = value`` entries of a section, as a dict."""
        out = {}
        for key, value in self._values.get(section, {}).items():
            if key.startswith(prefix + "."):
                out[key[len(prefix) + 1:]] = value
        return out

    def snapshot(self):
        return {sec: dict(sorted(items.items()))
                for sec, items in sorted(self._values.items())}


def _load_run_schema(cfg):
    path = cfg.text("data", "schema")
    return load_schema(path) if path else default_schema()


def _ensure_out(path):
    os.makedirs(path, exist_ok=True)
    return path


def _write_manifest(out_dir, command, cfg, extra=None):
    manifest = {
        "command": command,
        "config": cfg.snapshot(),
        "package_version": __version__,
        "kernel_backend": _kernels.BACKEND,
        "versions": {"numpy": np.__version__, "scipy": scipy.__version__},
    }
    if extra:
        manifest.update(extra)
    report.atomic_write_text(os.path.join(out_dir, "manifest.json"),
                             json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _parse_risk_args(risk_args):
    spec = {}
    for item in risk_args or []:
        if "=" not in item:
            raise ConfigError(f"--risk expects feature=weight, got {item!r}")
        name, _, value = item.partition("=")
        try:
            spec[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--risk weight must be a number in {item!r}") from None
    return spec


def _risk_spec(cfg, risk_args):
    spec = {name: float(value) for name, value in cfg.prefixed("synth", "risk").items()}
    spec.update(_parse_risk_args(risk_args))
    return spec


def _synth_marginals(cfg):
    out = {}
    for column, value in cfg.prefixed("synth", "marginal").items():
        table = {}
        for part in value.split(","):
            cat, _, weight = part.strip().rpartition(":")
            if not cat:
                raise ConfigError(f"marginal entry {part!r} must be category:weight")
            table[cat.strip()] = float(weight)
        out[column] = table
    return out


def _synth_ranges(cfg):
    out = {}
    for column, value in cfg.prefixed("synth", "range").items():
        parts = [p.strip() for p in value.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"range for {column!r} must be 'low, high'")
        out[column] = (int(parts[0]), int(parts[1]))
    return out


def cmd_synth(args):
    cfg = RunConfig(args.config, overrides={
        ("run", "seed"): args.seed,
        ("synth", "n"): args.n,
        ("synth", "intercept"): args.intercept,
        ("data", "schema"): args.schema,
    }, paper_defaults=args.paper_defaults)
    schema = _load_run_schema(cfg)
    risk_spec = _risk_spec(cfg, args.risk)
    seed = cfg.integer("run", "seed")
    table = generate_synthetic_cohort(
        cfg.integer("synth", "n"), seed, schema, risk_spec,
        intercept=cfg.number("synth", "intercept"),
        marginals=_synth_marginals(cfg) or None,
        numeric_ranges=_synth_ranges(cfg) or None)
    out = _ensure_out(args.out)
    write_raw_csv(table, os.path.join(out, "cohort.csv"))
    _write_manifest(out, "synth", cfg, extra={
        "seed": seed,
        "risk_spec": dict(sorted(risk_spec.items())),
        "rows": table.n_rows,
    })
    print(f"wrote {table.n_rows} rows to {os.path.join(out, 'cohort.csv')}")
    return 0


def _resolve_hyperparams(cfg, labels):
    spw_text = cfg.text("train", "scale_pos_weight").lower()
    if spw_text in ("auto", ""):
        spw = gbt.compute_scale_pos_weight(labels)
    else:
        spw = cfg.number("train", "scale_pos_weight")
    return gbt.Hyperparams(
        learning_rate=cfg.number("train", "learning_rate"),
        max_depth=cfg.integer("train", "max_depth"),
        n_estimators=cfg.integer("train", "n_estimators"),
        scale_pos_weight=spw,
        min_child_weight=cfg.number("train", "min_child_weight"),
        lambda_l2=cfg.number("train", "lambda_l2"),
        base_score=cfg.auto_number("train", "base_score"))


def cmd_train(args):
    cfg = RunConfig(args.config, overrides={
        ("run", "seed"): args.seed,
        ("data", "csv"): args.csv,
        ("data", "schema"): args.schema,
        ("data", "test_fraction"): args.test_fraction,
        ("data", "stratify"): args.stratify,
        ("train", "learning_rate"): args.learning_rate,
        ("train", "max_depth"): args.max_depth,
        ("train", "n_estimators"): args.n_estimators,
    }, paper_defaults=args.paper_defaults)
    csv_path = cfg.text("data", "csv")
    if not csv_path:
        raise ConfigError("train needs a cohort CSV (--csv or [data] csv)")
    schema = _load_run_schema(cfg)
    seed = cfg.integer("run", "seed")

    table = filter_complete(load_csv(csv_path, schema))
    if schema.label not in table.header:
        raise ConfigError(f"cohort CSV has no label column {schema.label!r}")
    matrix = encode(table, schema)
    pair = split(matrix, cfg.number("data", "test_fraction"), seed,
                 stratify=cfg.flag("data", "stratify"))
    hp = _resolve_hyperparams(cfg, pair.train.labels)
    model = gbt.train(pair.train, hp, seed)

    y_pred = model.predict_label(pair.test.values)
    clf_report = report.classification_report(pair.test.labels, y_pred)

    out = _ensure_out(args.out)
    report.atomic_write_bytes(os.path.join(out, "model.json"), gbt.serialize(model))
    report.atomic_write_text(os.path.join(out, "schema.ini"), dumps_schema(schema))
    write_encoded_csv(pair.train, os.path.join(out, "train_encoded.csv"), schema.label)
    write_encoded_csv(pair.test, os.path.join(out, "test_encoded.csv"), schema.label)
    test_raw = RawTable(header=list(table.header),
                        rows=[table.rows[i] for i in pair.test_indices])
    write_raw_csv(test_raw, os.path.join(out, "test_raw.csv"))
    report.atomic_write_text(os.path.join(out, "classification_report.txt"),
                             report.render_classification_report(clf_report))
    _write_csv_rows(os.path.join(out, "classification_report.csv"),
                    ["class", "precision", "recall", "f1", "support"],
                    report.classification_report_rows(clf_report))
    _write_manifest(out, "train", cfg, extra={
        "seed": seed,
        "scale_pos_weight": hp.scale_pos_weight,
        "rows": {"complete": table.n_rows, "train": pair.train.n_rows,
                 "test": pair.test.n_rows},
    })
    print(f"trained on {pair.train.n_rows} rows, "
          f"test accuracy {clf_report.accuracy:.4f} ({pair.test.n_rows} rows)")
    return 0


def _write_csv_rows(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(c) if isinstance(c, float) else c for c in row])
    report.atomic_write_text(path, buf.getvalue())


def _parse_instances(selector, n_test):
    if selector.strip().lower() == "all":
        return list(range(n_test))
    out = []
    for part in selector.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            a, _, b = part.partition("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    for idx in out:
        if not 0 <= idx < n_test:
            raise ConfigError(f"instance {idx} out of range (test set has {n_test} rows)")
    return sorted(set(out))


class _ExplainContext:
    """Everything needed to explain test instances from a train run dir."""

    def __init__(self, run_dir, cfg):
        self.cfg = cfg
        self.schema = load_schema(os.path.join(run_dir, "schema.ini"))
        with open(os.path.join(run_dir, "model.json"), "rb") as fh:
            self.model = gbt.deserialize(fh.read())
        self.train = read_encoded_csv(os.path.join(run_dir, "train_encoded.csv"),
                                      self.schema.label)
        self.test = read_encoded_csv(os.path.join(run_dir, "test_encoded.csv"),
                                     self.schema.label)
        raw_path = os.path.join(run_dir, "test_raw.csv")
        self.test_raw = load_csv(raw_path, self.schema) if os.path.exists(raw_path) else None

        self.seed = cfg.integer("run", "seed")
        self.output_space = cfg.text("explain", "output_space")
        self.background = shap_explainer.make_background(
            self.train, max_rows=cfg.integer("explain", "background_rows"),
            seed=self.seed)
        self.stats = lime_explainer.TrainingStats.from_matrix(
            self.train, schema=self.schema)
        method = cfg.text("explain", "method")
        if method == "auto":
            cap = cfg.integer("explain", "exact_max_features")
            method = "exact" if self.model.n_features <= cap else "sampled"
        if method not in ("exact", "sampled"):
            raise ConfigError(f"unknown explain method {method!r}")
        self.method = method
        self.n_permutations = cfg.integer("explain", "n_permutations")
        max_features = cfg.integer("lime", "max_features")
        self.lime_cfg_base = dict(
            n_samples=cfg.integer("lime", "n_samples"),
            kernel_width=cfg.auto_number("lime", "kernel_width"),
            max_features=max_features if max_features > 0 else None,
            ridge_penalty=cfg.number("lime", "ridge_penalty"))

    def shap_for(self, idx):
        x = self.test.values[idx]
        if self.method == "exact":
            return shap_explainer.exact_shapley(self.model, x, self.background,
                                                output_space=self.output_space)
        return shap_explainer.sampled_shapley(
            self.model, x, self.background, self.n_permutations,
            seed=np.random.default_rng([self.seed, idx, 1]).integers(2**31),
            output_space=self.output_space)

    def lime_for(self, idx):
        x = self.test.values[idx]
        lime_cfg = lime_explainer.SurrogateConfig(
            seed=int(np.random.default_rng([self.seed, idx, 2]).integers(2**31)),
            **self.lime_cfg_base)
        return lime_explainer.explain_instance(self.model, x, self.stats,
                                               lime_cfg).to_attribution()

    def explain_pair(self, idx):
        return idx, self.shap_for(idx), self.lime_for(idx)

    def run_instances(self, instances, threads):
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(self.explain_pair, instances))
        else:
            results = [self.explain_pair(i) for i in instances]
        # deterministic output order regardless of completion order
        return sorted(results, key=lambda r: r[0])

    def raw_display(self, idx):
        if self.test_raw is None:
            return [""] * self.model.n_features
        return encoded_display_values(self.schema, self.test_raw.rows[idx])


def _explain_overrides(args):
    return {
        ("run", "seed"): args.seed,
        ("run", "threads"): args.threads,
        ("explain", "method"): getattr(args, "method", None),
        ("explain", "background_rows"): args.background_rows,
        ("explain", "n_permutations"): args.n_permutations,
        ("explain", "output_space"): args.output_space,
        ("explain", "check_efficiency"): getattr(args, "check_efficiency", None),
        ("explain", "consistency_denominator"):
            getattr(args, "consistency_denominator", None),
        ("lime", "n_samples"): args.lime_samples,
        ("lime", "max_features"): args.lime_max_features,
    }


def cmd_explain(args):
    cfg = RunConfig(args.config, overrides=_explain_overrides(args),
                    paper_defaults=args.paper_defaults)
    ctx = _ExplainContext(args.run, cfg)
    out = _ensure_out(args.out or args.run)
    instances = _parse_instances(args.instances, ctx.test.n_rows)
    if not instances:
        raise ConfigError("no instances selected")

    results = ctx.run_instances(instances, cfg.integer("run", "threads"))
    records = []
    for idx, shap_attr, lime_attr in results:
        if cfg.flag("explain", "check_efficiency") and shap_attr.method == "shap-exact":
            gap = abs(shap_attr.efficiency_gap())
            if gap > 1e-8:
                raise XaiCrossError(
                    f"efficiency violated for instance {idx}: gap {gap:.3e}")
        records.append((idx, shap_attr))
        records.append((idx, lime_attr))
        report.export_local_comparison(
            shap_attr, lime_attr, ctx.raw_display(idx),
            os.path.join(out, f"local_comparison_{idx}.csv"))
    write_attributions_jsonl(records, os.path.join(out, "attributions.jsonl"))
    write_attributions_csv(records, os.path.join(out, "attributions.csv"))
    _write_manifest(out, "explain", cfg, extra={
        "seed": ctx.seed, "method": ctx.method, "instances": instances,
    })
    print(f"explained {len(instances)} instances ({ctx.method} + lime) -> {out}")
    return 0


def cmd_crossval(args):
    cfg = RunConfig(args.config, overrides=_explain_overrides(args),
                    paper_defaults=args.paper_defaults)
    ctx = _ExplainContext(args.run, cfg)
    out = _ensure_out(args.out or args.run)
    instances = list(range(ctx.test.n_rows))

    results = ctx.run_instances(instances, cfg.integer("run", "threads"))
    if args.lime_copy_shap:
        results = [(idx, s, Attribution(list(s.feature_names), s.phi.copy(),
                                        s.baseline, s.prediction, "lime"))
                   for idx, s, _ in results]

    features = None
    if cfg.text("explain", "consistency_denominator") == "split-used":
        names = ctx.model.feature_names
        features = [names[i] for i in sorted(ctx.model.used_features())]

    pairs = [(s, l) for _, s, l in results]
    cv_report = crossval.cohort_crossval(pairs, features=features)

    records = []
    for idx, shap_attr, lime_attr in results:
        records.append((idx, shap_attr))
        records.append((idx, lime_attr))
    write_attributions_jsonl(records, os.path.join(out, "attributions.jsonl"))
    report.atomic_write_text(os.path.join(out, "crossval_report.txt"),
                             crossval.render_crossval_report(cv_report))
    _write_csv_rows(os.path.join(out, "crossval_report.csv"),
                    ["metric", "statistic", "value"],
                    crossval.crossval_report_rows(cv_report))
    _write_manifest(out, "crossval", cfg, extra={
        "seed": ctx.seed, "method": ctx.method,
        "n_instances": cv_report.n_instances,
    })
    print(crossval.render_crossval_report(cv_report), end="")
    return 0


def cmd_report(args):
    cfg = RunConfig(args.config, overrides={("run", "seed"): args.seed,
                                            ("run", "threads"): args.threads},
                    paper_defaults=args.paper_defaults)
    items = read_attributions_jsonl(args.attributions)
    shap_items = [(i, a) for i, a in items if a.method.startswith("shap")]
    if not shap_items:
        raise ConfigError("attribution file contains no shap records")
    out = _ensure_out(args.out)

    attrs = [a for _, a in shap_items]
    importance = shap_explainer.global_importance(attrs)
    report.export_plot_data("importance", importance,
                            os.path.join(out, "importance.csv"),
                            os.path.join(out, "importance.svg"))

    if args.encoded:
        matrix = read_encoded_csv(args.encoded)
        rows = [i for i, _ in shap_items]
        sub = matrix.take(np.asarray(rows, dtype=np.int64))
        points = shap_explainer.summary_data(attrs, sub)
        report.export_plot_data("summary", points,
                                os.path.join(out, "summary.csv"),
                                os.path.join(out, "summary.svg"))

    if args.instances:
        by_id = {}
        for i, a in items:
            by_id.setdefault(i, {})[a.method] = a
        wanted = _parse_instances(args.instances, max(by_id) + 1)
        for idx in wanted:
            if idx not in by_id:
                raise ConfigError(f"no attributions for instance {idx}")
            for method, attr in sorted(by_id[idx].items()):
                tag = "shap" if method.startswith("shap") else method
                payload = list(zip(attr.feature_names, attr.phi))
                report.export_plot_data(
                    "local", payload,
                    os.path.join(out, f"local_{tag}_{idx}.csv"),
                    os.path.join(out, f"local_{tag}_{idx}.svg"))
    _write_manifest(out, "report", cfg, extra={
        "attributions": os.path.abspath(args.attributions),
        "n_shap_records": len(shap_items),
    })
    print(f"report artifacts written to {out}")
    return 0


def _common_flags(sub, with_out_required=True):
    sub.add_argument("--config", help="INI run config file")
    sub.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    sub.add_argument("--paper-defaults", action="store_true",
                     help="force the packaged cohort schema and default hyperparameters")
    if with_out_required:
        sub.add_argument("--out", required=True, help="output directory")


def _explain_flags(sub):
    sub.add_argument("--run", required=True, help="directory written by 'train'")
    sub.add_argument("--out", default=None, help="output directory (default: run dir)")
    sub.add_argument("--threads", type=int, default=None,
                     help="parallel instance explanations")
    sub.add_argument("--background-rows", type=int, default=None)
    sub.add_argument("--n-permutations", type=int, default=None)
    sub.add_argument("--output-space", choices=["probability", "raw"], default=None)
    sub.add_argument("--lime-samples", type=int, default=None)
    sub.add_argument("--lime-max-features", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="xaicross",
        description="Train a boosted-tree cohort classifier and cross-validate "
                    "its SHAP and LIME explanations.")
    parser.add_argument("--version", action="version", version=f"xaicross {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate a synthetic cohort CSV")
    _common_flags(p)
    p.add_argument("--n", type=int, default=None, help="number of visits")
    p.add_argument("--intercept", type=float, default=None,
                   help="base log-odds of the label")
    p.add_argument("--risk", action="append", default=None, metavar="FEATURE=W",
                   help="log-odds weight on an encoded feature (repeatable)")
    p.add_argument("--schema", default=None, help="schema INI file")
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("train", help="train the classifier and write run artifacts")
    _common_flags(p)
    p.add_argument("--csv", default=None, help="cohort CSV path")
    p.add_argument("--schema", default=None, help="schema INI file")
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--stratify", action="store_const", const=True, default=None,
                   help="stratify the split by label")
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--n-estimators", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("explain", help="attribute predictions for test instances")
    _common_flags(p, with_out_required=False)
    _explain_flags(p)
    p.add_argument("--instances", default="0",
                   help="'all', or comma/range list like 0,3,7-9")
    p.add_argument("--method", choices=["auto", "exact", "sampled"], default=None)
    p.add_argument("--check-efficiency", dest="check_efficiency",
                   action="store_const", const=True, default=None,
                   help="fail unless baseline + sum(phi) == prediction for exact runs")
    p.set_defaults(func=cmd_explain)

    p = subs.add_parser("crossval", help="compare SHAP and LIME over the whole test set")
    _common_flags(p, with_out_required=False)
    _explain_flags(p)
    p.add_argument("--method", choices=["auto", "exact", "sampled"], default=None)
    p.add_argument("--lime-copy-shap", action="store_true",
                   help="debug: feed the SHAP attribution in as the LIME one")
    p.add_argument("--consistency-denominator", choices=["all", "split-used"],
                   default=None)
    p.set_defaults(func=cmd_crossval)

    p = subs.add_parser("report", help="render plot data from saved attributions")
    _common_flags(p)
    p.add_argument("--threads", type=int, default=None,
                   help="accepted for interface uniformity; rendering is serial")
    p.add_argument("--attributions", required=True, help="attributions.jsonl path")
    p.add_argument("--encoded", default=None,
                   help="encoded test CSV (enables the summary plot)")
    p.add_argument("--instances", default=None, help="instances for local plots")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except XaiCrossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
