"""Command-line interface: exit codes, formats, file artifacts."""

import json

from click.testing import CliRunner

from qwgeom.cli import main
from qwgeom.model import fixture_path


def _fixture(name):
    return str(fixture_path(name))


def run(*args):
    return CliRunner().invoke(main, list(args))


def test_detect_not_representable_exits_3():
    result = run("detect", _fixture("EX2"))
    assert result.exit_code == 3
    assert "representable" in result.output


def test_detect_representable_exits_0():
    result = run("detect", _fixture("EX3"), "--format", "json")
    assert result.exit_code == 0
    report = json.loads(result.output)
    assert report["outcome"]["representable"] is True
    assert report["outcome"]["n_terms"] == 5


def test_detect_missing_file_exits_1():
    result = run("detect", "missing.json")
    assert result.exit_code == 1


def test_detect_accepts_fixture_names():
    result = run("detect", "ex3")
    assert result.exit_code == 0


def test_detect_unsupported_regime_exits_4(tmp_path):
    model = {
        "interior": [[0.2, 0.2, 0.0], [0.3, 0.2, 0.0], [0.1, 0.0, 0.0]],
        "horizontal": [0.2, 0.8, 0.0],
        "vertical": [0.2, 0.7, 0.0],
    }
    path = tmp_path / "southwest.json"
    path.write_text(json.dumps(model))
    result = run("detect", str(path))
    assert result.exit_code == 4


def test_detect_debug_curves_writes_figure(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = run("detect", _fixture("EX3"), "--debug-curves")
    assert result.exit_code == 0
    assert (tmp_path / "ex3_curves.png").exists()


def test_measure_reports_weights_and_performance():
    result = run("measure", _fixture("EX3"), "--format", "json")
    assert result.exit_code == 0
    report = json.loads(result.output)
    assert report["outcome"]["n_terms"] == 5
    assert abs(report["outcome"]["total_mass"] - 1.0) < 1e-9
    assert abs(report["outcome"]["performance"] - 41.2757) < 1e-3


def test_measure_perf_override():
    result = run("measure", _fixture("EX3"), "--perf", "f2",
                 "--format", "json")
    report = json.loads(result.output)
    assert abs(report["outcome"]["performance"] - 0.0016) < 1e-3


def test_measure_not_representable_exits_3():
    result = run("measure", _fixture("EX2"))
    assert result.exit_code == 3
    assert "bound" in result.output


def test_bound_single_candidate_reports_interval():
    result = run("bound", _fixture("EX5"), "--candidate", "5",
                 "--format", "json")
    assert result.exit_code == 0
    report = json.loads(result.output)
    outcome = report["outcome"]
    assert outcome["F_low"] <= outcome["F_up"]
    assert outcome["perturbation"]["C"] >= 1.0


def test_bound_requires_a_reward():
    result = run("bound", _fixture("EX1"))
    assert result.exit_code == 1
    assert "--perf" in result.output


def test_bound_on_representable_model_warns():
    # EX3 is representable, so the bound path warns up front that the
    # exact evaluation is available (whether or not a bound succeeds)
    result = run("bound", _fixture("EX3"), "--candidate", "2")
    assert "exact" in result.output


def test_bound_sweep_emits_csv_and_figure(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = run("bound", _fixture("EX5"), "--sweep", "3",
                 "--format", "csv")
    assert result.exit_code == 0
    header = result.output.split("\n")[0]
    assert header == "candidate_index,rho,sigma,C,F_low,F_up"
    assert (tmp_path / "ex5_sweep.csv").exists()
    assert (tmp_path / "ex5_sweep.png").exists()


def test_bound_dump_lp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = run("bound", _fixture("EX5"), "--candidate", "5",
                 "--dump-lp", "rows.txt")
    assert result.exit_code == 0
    assert "<=" in (tmp_path / "rows.txt").read_text()


def test_oracle_reports_value():
    result = run("oracle", _fixture("EX5"), "--size", "80",
                 "--format", "json")
    assert result.exit_code == 0
    report = json.loads(result.output)
    assert abs(report["outcome"]["performance"] - 0.0460348) < 1e-5


def test_oracle_rejects_tiny_size():
    result = run("oracle", _fixture("EX5"), "--size", "2")
    assert result.exit_code == 1


def test_oracle_dump_grid(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = run("oracle", _fixture("EX5"), "--size", "10",
                 "--dump-grid", "grid.csv")
    assert result.exit_code == 0
    lines = (tmp_path / "grid.csv").read_text().strip().split("\n")
    assert lines[0] == "i,j,value"
    assert len(lines) == 101


def test_formats_carry_identical_numbers():
    as_json = run("oracle", _fixture("EX5"), "--size", "60",
                  "--format", "json")
    as_table = run("oracle", _fixture("EX5"), "--size", "60",
                   "--format", "table")
    value = json.loads(as_json.output)["outcome"]["performance"]
    assert f"{value:.6g}" in as_table.output
