import os

import pandas as pd
import pytest

from magbill.cli import main
from magbill.domain.errors import ConfigError
from magbill.pipeline.config import parse_config
from magbill.pipeline.emit import emit_csv, emit_manifest
from magbill.pipeline.runner import ExperimentRunner, RunManifest, failed_manifest, run

SOLVE_CONFIG = """
# Dirichlet square, the smallest useful run
[experiment]
kind = solve

[domain]
kind = rectangle
nx = 8
ny = 8

[solver]
k = 5
"""

GAUGE_CONFIG = """
[experiment]
kind = gauge_check
[domain]
kind = rectangle
nx = 8
ny = 8
[gauge]
gauge = landau
B = 2.0
compare = symmetric
[bc]
bc = robin
alpha = 1.0
[solver]
method = dense
k = 4
"""

ROBIN_CONFIG = """
[experiment]
kind = robin_sweep
[domain]
nx = 8
ny = 8
[solver]
method = dense
k = 2
[sweep]
parameter = alpha
values = -1000, -1, 0, 1
"""


def _manifest(directory) -> dict:
    with open(os.path.join(directory, "manifest.txt"), encoding="utf-8") as f:
        return dict(line.rstrip("\n").split(" = ", 1) for line in f)


def test_defaults_are_applied():
    config = parse_config("[experiment]\nkind = solve\n")
    assert config.domain.kind == "rectangle"
    assert (config.domain.nx, config.domain.ny) == (32, 32)
    assert config.bc.bc == "dirichlet"
    assert config.solver.method == "iterative"
    assert config.output.formats == ["csv"]
    echo = config.echo()
    assert echo["experiment.kind"] == "solve"
    assert echo["domain.nx"] == 32


def test_values_are_converted():
    config = parse_config(
        "[gauge]\ngauge = symmetric\nB = 2.5\n[bc]\nbc = robin\nalpha = cos_perimeter\n"
        "[sweep]\nvalues = 1, 2.5, 4\nresolutions = 8, 16, 32\n"
    )
    assert config.gauge.B == 2.5
    assert config.bc.alpha == "cos_perimeter"
    assert config.sweep.values == [1.0, 2.5, 4.0]
    assert config.sweep.resolutions == [8, 16, 32]


def test_ab_needs_an_annulus():
    with pytest.raises(ConfigError, match="AB requires annulus"):
        parse_config("[domain]\nkind = disk\n[gauge]\ngauge = ab\nphi = 1.0\n")


def test_duplicate_key_names_both_lines():
    with pytest.raises(ConfigError) as info:
        parse_config("[solver]\nk = 3\nk = 4\n")
    assert info.value.line == 3
    assert "lines 2 and 3" in str(info.value)


@pytest.mark.parametrize(
    "text, line",
    [
        ("[solver]\nkk = 3\n", 2),
        ("[solver]\nk = three\n", 2),
        ("[solver]\nk = 3\n[plots]\n", 3),
        ("k = 3\n", 1),
        ("[solver]\nmethod dense\n", 2),
        ("[solver\n", 1),
    ],
)
def test_syntax_errors_report_their_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


@pytest.mark.parametrize(
    "text",
    [
        "[experiment]\nkind = flux_sweep\n",
        "[experiment]\nkind = landau\n",
        "[experiment]\nkind = convergence\n[sweep]\nresolutions = 8, 16\n",
        "[experiment]\nkind = gauge_check\n",
        "[bc]\nbc = chiral\nalpha = 1.0\n",
        "[bc]\ninner_bc = neumann\n",
        "[solver]\nk = 0\n",
        "[experiment]\nkind = sae1d\n",
        "[experiment]\nkind = robin_sweep\n[sweep]\nvalues = 1, 0\n",
    ],
)
def test_inadmissible_combinations_are_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_is_read_from_a_path(tmp_path):
    path = tmp_path / "solve.cfg"
    path.write_text(SOLVE_CONFIG, encoding="utf-8")
    config = parse_config(str(path))
    assert config.solver.k == 5
    assert config.domain.nx == 8


def test_emit_csv_is_deterministic(tmp_path):
    table = pd.DataFrame({"index": [0, 1], "lambda": [0.1, 2.0 / 3.0]})
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(table, str(first))
    emit_csv(table, str(second))
    raw = first.read_bytes()
    assert raw == second.read_bytes()
    assert b"\r" not in raw
    assert raw.splitlines()[0] == b"index,lambda"
    assert b"0.10000000000000001" in raw


def test_empty_table_keeps_its_header(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv(pd.DataFrame(columns=["param_value", "index", "lambda", "residual"]), str(path))
    assert path.read_text(encoding="utf-8") == "param_value,index,lambda,residual\n"


def test_manifest_lines(tmp_path):
    manifest = RunManifest(experiment="solve", status="passed", grid_hash="abc")
    manifest.record("hermiticity_defect", 1e-16, True)
    manifest.info["levels"] = [1.0, 2.0]
    emit_manifest(manifest, str(tmp_path / "manifest.txt"))
    lines = _manifest(tmp_path)
    assert lines["status"] == "passed"
    assert lines["grid_hash"] == "abc"
    assert lines["check.hermiticity_defect"] == "1.000000e-16 PASS"
    assert lines["info.levels"] == "1, 2"


def test_failed_manifest(tmp_path):
    manifest = failed_manifest(ConfigError("bad", 4), str(tmp_path))
    assert not manifest.passed
    lines = _manifest(tmp_path)
    assert lines["status"] == "failed"
    assert lines["error"] == "ConfigError: line 4: bad"


def test_solve_run_writes_eigenvalues(tmp_path):
    manifest = run(parse_config(SOLVE_CONFIG), str(tmp_path))
    assert manifest.passed, manifest.error
    table = pd.read_csv(tmp_path / "eigenvalues.csv")
    assert list(table.columns) == ["param_value", "index", "lambda", "residual"]
    assert len(table) == 5
    assert table["lambda"].is_monotonic_increasing
    assert manifest.checks["dirichlet_above_neumann"].passed
    lines = _manifest(tmp_path)
    assert lines["status"] == "passed"
    assert lines["config.domain.nx"] == "8"
    assert lines["artifacts"] == "eigenvalues.csv"


def test_dump_format_writes_the_debug_tables(tmp_path):
    text = SOLVE_CONFIG + "\n[output]\nformats = csv, dump\n"
    manifest = run(parse_config(text), str(tmp_path))
    assert manifest.passed
    for name in ("nodes", "links", "matrix", "weights"):
        assert (tmp_path / f"{name}.csv").exists()


def test_gauge_check_run_passes(tmp_path):
    manifest = run(parse_config(GAUGE_CONFIG), str(tmp_path))
    assert manifest.passed, manifest.error
    table = pd.read_csv(tmp_path / "gauge_check.csv")
    assert list(table.columns) == ["index", "lambda", "lambda_transformed", "difference"]
    assert table["difference"].abs().max() < 1e-9


def test_robin_sweep_run_passes(tmp_path):
    manifest = run(parse_config(ROBIN_CONFIG), str(tmp_path))
    assert manifest.passed, manifest.error
    sweep = pd.read_csv(tmp_path / "sweep.csv")
    assert list(sweep.columns) == ["param_value", "lambda_0", "lambda_1"]
    assert len(sweep) == 4


def test_failing_experiment_still_writes_a_manifest(tmp_path):
    text = SOLVE_CONFIG.replace("k = 5", "k = 5000")
    manifest = run(parse_config(text), str(tmp_path))
    assert manifest.status == "failed"
    assert _manifest(tmp_path)["error"].startswith("DimensionMismatchError")


def _crash(self):
    raise RuntimeError("arpack failure")


def test_unexpected_crash_marks_the_manifest_failed(tmp_path, monkeypatch):
    monkeypatch.setattr(ExperimentRunner, "_run_solve", _crash)
    with pytest.raises(RuntimeError):
        run(parse_config(SOLVE_CONFIG), str(tmp_path / "direct"))
    lines = _manifest(tmp_path / "direct")
    assert lines["status"] == "failed"
    assert lines["error"] == "RuntimeError: arpack failure"

    path = tmp_path / "solve.cfg"
    path.write_text(SOLVE_CONFIG, encoding="utf-8")
    out = tmp_path / "cli"
    assert main(["run", str(path), "--out", str(out)]) == 1
    assert _manifest(out)["status"] == "failed"


def test_cli_run_exit_codes(tmp_path):
    good = tmp_path / "good.cfg"
    good.write_text(SOLVE_CONFIG, encoding="utf-8")
    assert main(["run", str(good), "--out", str(tmp_path / "good")]) == 0

    corrupt = tmp_path / "corrupt.cfg"
    corrupt.write_text("[solver]\nk = 3\nk = 4\n", encoding="utf-8")
    out = tmp_path / "corrupt"
    assert main(["run", str(corrupt), "--out", str(out)]) == 2
    lines = _manifest(out)
    assert lines["status"] == "failed"
    assert "duplicate key" in lines["error"]


def test_cli_check(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text(SOLVE_CONFIG, encoding="utf-8")
    assert main(["check", str(good)]) == 0
    assert "ok (solve on rectangle)" in capsys.readouterr().out
    bad = tmp_path / "bad.cfg"
    bad.write_text("[domain]\nkind = disk\n[gauge]\ngauge = ab\n", encoding="utf-8")
    assert main(["check", str(bad)]) == 2
    assert "AB requires annulus" in capsys.readouterr().err


def test_missing_config_path_is_not_parsed_as_text(tmp_path, capsys):
    missing = tmp_path / "missing.cfg"
    with pytest.raises(FileNotFoundError):
        parse_config(str(missing))
    with pytest.raises(FileNotFoundError):
        parse_config(missing)
    out = tmp_path / "out"
    assert main(["run", str(missing), "--out", str(out)]) == 2
    assert _manifest(out)["error"].startswith("FileNotFoundError")
    assert main(["check", str(missing)]) == 2
    assert "missing.cfg" in capsys.readouterr().err


def test_cli_sae1d_scalar_family(tmp_path):
    assert main(["sae1d", "--theta", "1.0,2.0", "--n", "200", "--k", "3", "--out", str(tmp_path)]) == 0
    table = pd.read_csv(tmp_path / "eigenvalues.csv")
    assert len(table) == 6
    assert sorted(set(table["param_value"])) == [1.0, 2.0]


def test_cli_sae1d_unitary_with_potential(tmp_path):
    argv = ["sae1d", "--u", "0,1,1,0", "--potential", "sine", "--n", "200", "--method", "dense", "--out", str(tmp_path)]
    assert main(argv) == 0
    lines = _manifest(tmp_path)
    assert lines["check.gauge_away_discrepancy"].endswith("PASS")


def test_cli_sae1d_profile(tmp_path):
    assert main(["sae1d", "--profile", "2.0", "--n", "200", "--out", str(tmp_path)]) == 0
    profile = pd.read_csv(tmp_path / "groundstate.csv")
    assert list(profile.columns) == ["x", "re", "im"]
    assert len(profile) == 200


def test_cli_sae1d_needs_a_condition(tmp_path):
    assert main(["sae1d", "--out", str(tmp_path)]) == 2
    assert _manifest(tmp_path)["experiment"] == "sae1d"
