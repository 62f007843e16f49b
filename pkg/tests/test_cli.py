import json
import os
import subprocess
import sys

import pytest

from pdtrace import cli
from pdtrace.evaluation import ExperimentResult

DATA = os.path.join(os.path.dirname(__file__), "data")
FIXTURE = os.path.join(DATA, "reference_fold_predictions.json")

REFERENCE_GRID = {
    "accuracy": ["88.89", "66.67"] + ["88.89"] * 8,
    "precision": ["0.92", "0.44"] + ["0.92"] * 8,
    "recall": ["0.89", "0.67"] + ["0.89"] * 8,
    "specificity": ["100.00", "0.00"] + ["100.00"] * 8,
    "kappa": ["76.92", "0.00"] + ["76.92"] * 8,
    "AP": ["0.94", "0.94", "0.94", "0.96", "0.96", "0.94", "0.94", "0.98", "0.94", "0.94"],
    "Time(hr)": ["2.39", "2.46", "2.41", "2.33", "2.36", "2.35", "2.34", "2.34", "2.48", "2.38"],
}


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def error_of(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(err)["error"]


@pytest.fixture(scope="module")
def cohort(tmp_path_factory):
    out = tmp_path_factory.mktemp("cohort")
    assert cli.main(["synth", "--controls", "4", "--patients", "5", "--rate", "20", "--seed", "3", "--out", str(out)]) == 0
    return out / "manifest.csv"


class TestReplay:
    def test_reference_grid(self, tmp_path, capsys):
        assert run_cli("run", "--replay", FIXTURE, "--out", tmp_path) == 0
        result = ExperimentResult.from_json(tmp_path / "result.json")
        grid = dict(cli.metric_grid(result))
        assert grid == REFERENCE_GRID
        report = (tmp_path / "report.md").read_text()
        assert "fold 8 (highest AP 0.98, kappa 76.92)" in report
        assert "| 1 (Patient) | 1.00 | 0.83 | 6 |" in report
        assert "| 0 (Control) | 0.75 | 1.00 | 3 |" in report

    def test_report_command(self, tmp_path, capsys):
        run_cli("run", "--replay", FIXTURE, "--out", tmp_path)
        capsys.readouterr()
        assert run_cli("report", tmp_path / "result.json") == 0
        assert "| kappa | 76.92 | 0.00 |" in capsys.readouterr().out


class TestCompare:
    def test_identical_results(self, tmp_path, capsys):
        run_cli("run", "--replay", FIXTURE, "--out", tmp_path / "a")
        assert run_cli("compare", tmp_path / "a/result.json", tmp_path / "a/result.json", "--out", tmp_path / "c") == 0
        doc = json.loads((tmp_path / "c/tests.json").read_text())
        assert doc["mann_whitney"]["p_value"] == 1.0
        assert doc["mann_whitney"]["significant"] is False
        for name in ("summary.csv", "boxplot.csv", "violin.csv", "bean_points.csv",
                     "boxplot.svg", "violin.svg", "bean.svg"):
            assert (tmp_path / "c" / name).exists()

    def test_three_way(self, tmp_path):
        run_cli("run", "--replay", FIXTURE, "--out", tmp_path / "a")
        paths = [tmp_path / "a/result.json"] * 3
        assert run_cli("compare", *paths, "--out", tmp_path / "c") == 0
        doc = json.loads((tmp_path / "c/tests.json").read_text())
        assert doc["kruskal_wallis"]["p_value"] == 1.0
        assert len(doc["tukey_hsd"]) == 3

    def test_needs_two(self, tmp_path, capsys):
        run_cli("run", "--replay", FIXTURE, "--out", tmp_path)
        assert run_cli("compare", tmp_path / "result.json") == 2
        assert error_of(capsys)["kind"] == "usage"

    def test_missing_file(self, tmp_path, capsys):
        assert run_cli("compare", tmp_path / "x.json", tmp_path / "y.json") == 1
        assert error_of(capsys)["kind"] == "missing_file"

    def test_bad_schema(self, tmp_path, capsys):
        (tmp_path / "r.json").write_text('{"schema_version": 42}')
        assert run_cli("compare", tmp_path / "r.json", tmp_path / "r.json") == 1
        assert error_of(capsys)["kind"] == "schema"


class TestRun:
    def test_untrained_run(self, cohort, tmp_path):
        out = tmp_path / "run"
        code = run_cli("run", "--manifest", cohort, "--epochs", "0", "--set", "k=3", "--set", "hidden=2",
                       "--seed", "5", "--out", out)
        assert code == 0
        result = ExperimentResult.from_json(out / "result.json")
        assert len(result.folds) == 3
        assert all(s == 0.5 for f in result.folds for s in f.scores)
        for name in ("run_config.txt", "inputs.sha256", "report.md"):
            assert (out / name).exists()
        assert (out / "fold_01" / "model.ckpt").exists()
        cfg = (out / "run_config.txt").read_text()
        assert "seed = 5" in cfg and "epochs = 0" in cfg and "k = 3" in cfg

    def test_precedence(self, cohort, tmp_path):
        conf = tmp_path / "exp.conf"
        conf.write_text(f"manifest = {cohort}\nk = 3\nepochs = 4\nhidden = 2  # small\n")
        out = tmp_path / "run"
        assert run_cli("run", "--config", conf, "--epochs", "0", "--out", out) == 0
        cfg = (out / "run_config.txt").read_text()
        assert "epochs = 0" in cfg and "k = 3" in cfg and "batch_size = 8" in cfg

    def test_unknown_config_key(self, tmp_path, capsys):
        conf = tmp_path / "exp.conf"
        conf.write_text("learning_rate = 3\n")
        assert run_cli("run", "--config", conf) == 1
        assert error_of(capsys)["kind"] == "config"

    def test_bad_value(self, cohort, capsys):
        assert run_cli("run", "--manifest", cohort, "--set", "k=ten") == 1
        assert error_of(capsys)["kind"] == "config"

    def test_missing_manifest(self, tmp_path, capsys):
        assert run_cli("run", "--manifest", tmp_path / "none.csv") == 1
        assert error_of(capsys)["kind"] == "missing_file"

    def test_no_manifest(self, capsys):
        assert run_cli("run") == 2

    def test_bad_jobs(self, cohort, capsys):
        assert run_cli("run", "--manifest", cohort, "--jobs", "0") == 2


class TestEntryPoint:
    def test_usage_error(self, capsys):
        assert run_cli("frobnicate") == 2
        err = error_of(capsys)
        assert err["kind"] == "usage" and err["command"] == "frobnicate"

    def test_synth_env_out(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
        assert run_cli("synth", "--controls", "1", "--patients", "1", "--rate", "20") == 0
        assert (tmp_path / "synth_cube" / "manifest.csv").exists()

    def test_module_invocation(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "pdtrace.cli", "report", str(tmp_path / "nope.json")],
                              capture_output=True, text=True)
        assert proc.returncode == 1
        assert json.loads(proc.stderr)["error"]["kind"] == "missing_file"
