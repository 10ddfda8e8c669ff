import json
import subprocess
import sys

import pytest

from gsgp_red.cli import main, read_config_file
from gsgp_red.gp import ConfigError

DATA = "synthetic:prod-sum:60:0.1"
SMALL = ["--pop", "12", "--gens", "4"]


def test_run_writes_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["run", "--engine", "gsgp-red", "--data", DATA, *SMALL, "--out", str(out), "--print-expr"]) == 0
    rep = json.loads(out.read_text())
    assert rep["engine"] == "gsgp-red" and rep["schema_version"] == 1
    assert len(rep["train_rmse_trace"]) == 5
    assert rep["n_train"] == 48 and rep["n_test"] == 12
    assert rep["export"]["terms"] and "infix" in rep["export"]
    assert " * " in capsys.readouterr().out


def test_gsgp_print_expr_refuses_over_budget(tmp_path, capsys):
    out = tmp_path / "g.json"
    args = ["run", "--engine", "gsgp", "--data", DATA, "--pop", "20", "--gens", "20", "--p-xover", "0.9"]
    assert main([*args, "--out", str(out), "--print-expr", "--node-budget", "10"]) == 0
    text = capsys.readouterr().out
    assert "not materialized" in text and "exact_size=" in text
    rep = json.loads(out.read_text())
    assert int(rep["export"]["exact_size"]) > 10 and "prefix" not in rep["export"]


def test_gp_run_folds_one(tmp_path):
    out = tmp_path / "gp.json"
    assert main(["run", "--engine", "gp", "--data", DATA, *SMALL, "--folds", "1", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["n_test"] == 0 and rep["best_test_rmse"] is None


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# desk run\nengine = gp\npop = 9\ngens = 2\nseed = 3\n")
    out = tmp_path / "o.json"
    assert main(["run", "--config", str(cfg), "--data", DATA, "--gens", "3", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["engine"] == "gp" and rep["config"]["pop_size"] == 9
    assert rep["config"]["generations"] == 3 and rep["seed"] == 3


@pytest.mark.parametrize(
    "argv, code",
    [
        (["run", "--pop", "x"], 2),
        (["run", "--data", DATA, "--pop", "1"], 2),
        (["run"], 2),
        (["run", "--data", DATA, "--target-col", "q"], 2),
        (["nonsense"], 2),
        (["run", "--data", "/no/such.csv"], 3),
        (["run", "--data", "synthetic:prod-sum:3", "--folds", "5"], 3),
        (["run", "--data", "synthetic:unknown"], 3),
        (["expected-size", "gsm", "--g", "1", "--ep0", "0"], 2),
        (["expected-size", "gsm", "--g", "1", "--ep0", "abc"], 2),
    ],
)
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("popsize = 3\n")
    assert main(["run", "--config", str(cfg), "--data", DATA]) == 2
    cfg.write_text("pop = many\n")
    assert main(["run", "--config", str(cfg), "--data", DATA]) == 2
    cfg.write_text("just words\n")
    with pytest.raises(ConfigError):
        read_config_file(cfg)


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["gsx-e", "--g", "0", "--ep0", "10"], "10"),
        (["gsx-e", "--g", "1", "--ep0", "10"], "25"),
        (["gsm", "--g", "3", "--ep0", "10", "--er", "7"], "64"),
        (["gsx-m", "--g", "2", "--ep0", "10", "--er", "7", "--c", "4"], "73"),
        (["gsx-e", "--g", "250", "--ep0", "30", "--exact"], str(30 * 2**250 + (2**250 - 1) * 5)),
        (["gsm", "--g", "1", "--ep0", "1/2", "--exact"], "9/2"),
        (["gsx-e", "--g", "5000", "--ep0", "30"], None),
    ],
)
def test_expected_size(argv, expected, capsys):
    assert main(["expected-size", *argv]) == 0
    out = capsys.readouterr().out.strip()
    if expected is None:
        assert out.startswith("1e1506.")
    else:
        assert out == expected


def test_expected_size_log10(capsys):
    assert main(["expected-size", "gsx-e", "--g", "250", "--ep0", "30", "--log10"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(76.8015, abs=1e-3)


def test_verify_equivalence(tmp_path, capsys):
    out = tmp_path / "eq.json"
    assert main(["verify-equivalence", "--data", DATA, *SMALL, "--n-seeds", "2", "--out", str(out)]) == 0
    reports = json.loads(out.read_text())
    assert [r["seed"] for r in reports] == [0, 1]
    assert all(r["max_trace_deviation"] == 0.0 for r in reports)


def test_analyze_growth(tmp_path, capsys):
    out = tmp_path / "growth"
    argv = ["analyze-growth", "--data", DATA, "--pop", "15", "--gens", "6", "--p-xover", "1.0", "--out", str(out)]
    assert main(argv) == 0
    summary = json.loads((out / "frequency.json").read_text())
    assert summary["survivors"][0] == 15 and len(summary["survivors"]) == 7
    assert summary["survivors"][-1] <= 15
    assert (out / "frequency.csv").read_text().startswith("generation,key,count")
    assert len(summary["log10_expected_size"]["gsx-e"]) == 7


def test_bench(tmp_path, capsys):
    suite = tmp_path / "suite.cfg"
    suite.write_text(
        "datasets = synthetic:prod-sum:40:0.1, synthetic:poly3:40\n"
        "engines = gp, gsgp, gsgp-red\nfolds = 2\nrepeats = 1\npop = 10\ngens = 3\n"
    )
    assert main(["bench", str(suite), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "suite_report.json").read_text())
    assert len(rep["summaries"]) == 6
    assert "Median RMSE" in (tmp_path / "suite_tables.txt").read_text()
    suite.write_text("datasets = /nope.csv, synthetic:poly3:40\nengines = gp\nfolds = 2\nrepeats = 1\npop = 10\ngens = 2\n")
    assert main(["bench", str(suite), "--out", str(tmp_path)]) == 1
    suite.write_text("datasets = synthetic:poly3:40\nfolds = two\n")
    assert main(["bench", str(suite)]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gsgp_red", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "0.1.0"
