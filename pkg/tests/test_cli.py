import csv
import json

import pytest

from xaicross.cli import main

SMALL_SCHEMA = """\
[schema]
label = mortality
columns = color, age

[column.color]
kind = onehot
categories = red, green, blue

[column.age]
kind = numeric
"""


@pytest.fixture
def small_schema_path(tmp_path):
    path = tmp_path / "schema.ini"
    path.write_text(SMALL_SCHEMA)
    return str(path)


def run(*argv):
    return main(list(argv))


@pytest.fixture
def train_run(tmp_path, small_schema_path):
    """A trained run dir on a 4-feature cohort with a dominant risk feature."""
    synth_dir = tmp_path / "synth"
    train_dir = tmp_path / "train"
    assert run("synth", "--out", str(synth_dir), "--n", "260", "--seed", "3",
               "--schema", small_schema_path, "--risk", "color_red=2.5",
               "--intercept=-2.0") == 0
    assert run("train", "--out", str(train_dir), "--csv",
               str(synth_dir / "cohort.csv"), "--schema", small_schema_path,
               "--seed", "1") == 0
    return train_dir


class TestSynth:
    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("synth", "--out", str(out), "--n", "150", "--seed", "0",
                       "--risk", "financ_Medicare=2.0") == 0
        assert (a / "cohort.csv").read_bytes() == (b / "cohort.csv").read_bytes()
        assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()

    def test_manifest_records_risk_spec(self, tmp_path):
        out = tmp_path / "s"
        assert run("synth", "--out", str(out), "--n", "50", "--seed", "0",
                   "--risk", "age=0.5", "--risk", "gender_M=1.25") == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["risk_spec"] == {"age": 0.5, "gender_M": 1.25}
        assert manifest["command"] == "synth"

    def test_zero_rows_fails(self, tmp_path, capsys):
        rc = run("synth", "--out", str(tmp_path / "s"), "--n", "0", "--seed", "0")
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_risk_feature_fails(self, tmp_path, capsys):
        rc = run("synth", "--out", str(tmp_path / "s"), "--n", "10",
                 "--risk", "bogus=1.0")
        assert rc == 1
        assert "bogus" in capsys.readouterr().err


class TestTrain:
    def test_separable_cohort_high_accuracy(self, tmp_path, capsys):
        synth_dir = tmp_path / "s"
        assert run("synth", "--out", str(synth_dir), "--n", "1200", "--seed", "0",
                   "--risk", "age=3.0", "--intercept=-165.0") == 0
        train_dir = tmp_path / "t"
        assert run("train", "--out", str(train_dir), "--csv",
                   str(synth_dir / "cohort.csv"), "--seed", "0") == 0
        with open(train_dir / "classification_report.csv") as fh:
            rows = {r[0]: r for r in csv.reader(fh)}
        assert float(rows["accuracy"][3]) >= 0.95

    def test_rerun_is_byte_identical(self, tmp_path, small_schema_path):
        synth_dir = tmp_path / "s"
        assert run("synth", "--out", str(synth_dir), "--n", "200", "--seed", "5",
                   "--schema", small_schema_path, "--risk", "color_red=2.0") == 0
        outs = []
        for name in ("t1", "t2"):
            out = tmp_path / name
            assert run("train", "--out", str(out), "--csv",
                       str(synth_dir / "cohort.csv"), "--schema",
                       small_schema_path, "--seed", "2") == 0
            outs.append(out)
        for artifact in ("model.json", "classification_report.txt",
                         "test_encoded.csv", "manifest.json"):
            assert (outs[0] / artifact).read_bytes() == (outs[1] / artifact).read_bytes()

    def test_missing_label_column_fails(self, tmp_path, small_schema_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("color,age\nred,30\nblue,40\n")
        rc = run("train", "--out", str(tmp_path / "t"), "--csv", str(bad),
                 "--schema", small_schema_path)
        assert rc == 1
        assert "mortality" in capsys.readouterr().err

    def test_missing_csv_flag_fails(self, tmp_path, capsys):
        rc = run("train", "--out", str(tmp_path / "t"))
        assert rc == 1


class TestExplain:
    def test_single_instance_two_records(self, tmp_path, train_run):
        out = tmp_path / "e"
        assert run("explain", "--run", str(train_run), "--out", str(out),
                   "--instances", "0", "--method", "exact",
                   "--lime-samples", "200", "--check-efficiency") == 0
        lines = (out / "attributions.jsonl").read_text().strip().splitlines()
        records = [json.loads(l) for l in lines]
        assert {r["method"] for r in records} == {"shap-exact", "lime"}
        assert {r["instance"] for r in records} == {0}
        assert len(records) == 2 * 4  # one line per (method, feature)
        assert (out / "local_comparison_0.csv").exists()

    def test_all_instances_record_count(self, tmp_path, train_run):
        out = tmp_path / "e"
        assert run("explain", "--run", str(train_run), "--out", str(out),
                   "--instances", "all", "--method", "exact",
                   "--lime-samples", "120") == 0
        records = [json.loads(l) for l in
                   (out / "attributions.jsonl").read_text().strip().splitlines()]
        n_test = len({r["instance"] for r in records})
        by_instance_method = {(r["instance"], r["method"]) for r in records}
        assert len(by_instance_method) == 2 * n_test
        assert n_test == 52  # 20% of 260

    def test_out_of_range_instance_fails(self, tmp_path, train_run, capsys):
        rc = run("explain", "--run", str(train_run), "--out", str(tmp_path / "e"),
                 "--instances", "9999")
        assert rc == 1
        assert "out of range" in capsys.readouterr().err

    def test_sampled_rerun_byte_identical(self, tmp_path, train_run):
        outs = []
        for name in ("e1", "e2"):
            out = tmp_path / name
            assert run("explain", "--run", str(train_run), "--out", str(out),
                       "--instances", "0-3", "--method", "sampled",
                       "--n-permutations", "25", "--lime-samples", "150",
                       "--seed", "4") == 0
            outs.append(out)
        assert (outs[0] / "attributions.jsonl").read_bytes() == \
            (outs[1] / "attributions.jsonl").read_bytes()

    def test_threads_do_not_change_results(self, tmp_path, train_run):
        outs = []
        for name, threads in (("e1", "1"), ("e2", "3")):
            out = tmp_path / name
            assert run("explain", "--run", str(train_run), "--out", str(out),
                       "--instances", "0-5", "--method", "sampled",
                       "--n-permutations", "20", "--lime-samples", "150",
                       "--threads", threads, "--seed", "0") == 0
            outs.append(out)
        assert (outs[0] / "attributions.jsonl").read_bytes() == \
            (outs[1] / "attributions.jsonl").read_bytes()

    def test_config_file_and_flag_precedence(self, tmp_path, train_run):
        config = tmp_path / "run.ini"
        config.write_text("[explain]\nn_permutations = 7\n")
        out1 = tmp_path / "c1"
        assert run("explain", "--run", str(train_run), "--out", str(out1),
                   "--config", str(config), "--instances", "0",
                   "--method", "sampled", "--lime-samples", "150") == 0
        manifest = json.loads((out1 / "manifest.json").read_text())
        assert manifest["config"]["explain"]["n_permutations"] == "7"
        out2 = tmp_path / "c2"
        assert run("explain", "--run", str(train_run), "--out", str(out2),
                   "--config", str(config), "--instances", "0",
                   "--method", "sampled", "--n-permutations", "9",
                   "--lime-samples", "150") == 0
        manifest = json.loads((out2 / "manifest.json").read_text())
        assert manifest["config"]["explain"]["n_permutations"] == "9"


class TestCrossval:
    def read_report(self, out):
        with open(out / "crossval_report.csv") as fh:
            rows = list(csv.reader(fh))[1:]
        return {(metric, stat): float(value) for metric, stat, value in rows}

    def test_self_agreement_via_debug_flag(self, tmp_path, train_run):
        out = tmp_path / "cv"
        assert run("crossval", "--run", str(train_run), "--out", str(out),
                   "--method", "exact", "--lime-samples", "120",
                   "--lime-copy-shap") == 0
        values = self.read_report(out)
        assert values[("impact_value_consistency", "mean")] == 1.0
        assert values[("impact_value_consistency", "std")] == 0.0
        assert values[("impact_ranking_difference", "mean")] == 0.0
        assert values[("impact_ranking_difference", "min")] == 0.0
        assert values[("impact_ranking_difference", "max")] == 0.0
        assert values[("spearman_positive", "r")] == 1.0
        assert values[("spearman_negative", "r")] == 1.0

    def test_bounds_and_instance_count(self, tmp_path, train_run):
        out = tmp_path / "cv"
        assert run("crossval", "--run", str(train_run), "--out", str(out),
                   "--method", "exact", "--lime-samples", "200") == 0
        values = self.read_report(out)
        assert 0.0 <= values[("impact_value_consistency", "mean")] <= 1.0
        assert 0.0 <= values[("impact_value_consistency", "min")]
        assert values[("impact_value_consistency", "max")] <= 1.0
        for group in ("spearman_positive", "spearman_negative"):
            assert abs(values[(group, "r")]) <= 1.0
        assert values[("cohort", "n_instances")] == 52
        text = (out / "crossval_report.txt").read_text()
        assert "Instances: 52" in text

    def test_split_used_denominator(self, tmp_path, train_run):
        out = tmp_path / "cv"
        assert run("crossval", "--run", str(train_run), "--out", str(out),
                   "--method", "exact", "--lime-samples", "120",
                   "--consistency-denominator", "split-used",
                   "--lime-copy-shap") == 0
        values = self.read_report(out)
        assert values[("impact_value_consistency", "mean")] == 1.0


class TestReportCommand:
    def test_artifacts_written(self, tmp_path, train_run):
        explain_out = tmp_path / "e"
        assert run("explain", "--run", str(train_run), "--out", str(explain_out),
                   "--instances", "0,1", "--method", "exact",
                   "--lime-samples", "120") == 0
        report_out = tmp_path / "r"
        assert run("report", "--attributions",
                   str(explain_out / "attributions.jsonl"),
                   "--encoded", str(train_run / "test_encoded.csv"),
                   "--instances", "0", "--out", str(report_out)) == 0
        for name in ("importance.csv", "importance.svg", "summary.csv",
                     "summary.svg", "local_shap_0.csv", "local_shap_0.svg",
                     "local_lime_0.csv", "local_lime_0.svg"):
            assert (report_out / name).exists(), name

    def test_report_rerun_byte_identical(self, tmp_path, train_run):
        explain_out = tmp_path / "e"
        assert run("explain", "--run", str(train_run), "--out", str(explain_out),
                   "--instances", "0,1", "--method", "exact",
                   "--lime-samples", "120") == 0
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert run("report", "--attributions",
                       str(explain_out / "attributions.jsonl"),
                       "--encoded", str(train_run / "test_encoded.csv"),
                       "--out", str(out)) == 0
            outs.append(out)
        for artifact in ("importance.csv", "importance.svg", "summary.csv",
                         "summary.svg"):
            assert (outs[0] / artifact).read_bytes() == \
                (outs[1] / artifact).read_bytes()

    def test_report_without_shap_records_fails(self, tmp_path, capsys):
        path = tmp_path / "a.jsonl"
        path.write_text(json.dumps({"instance": 0, "feature": "f0", "phi": 0.1,
                                    "baseline": 0.0, "prediction": 0.1,
                                    "method": "lime"}) + "\n")
        rc = run("report", "--attributions", str(path), "--out", str(tmp_path / "r"))
        assert rc == 1
