import csv

import pytest

from ekffp import ConfigurationError
from ekffp.cli import main
from ekffp.config import bundled_configs, load_config, parse_config

SMALL_RUN = """
schema_version = 1
[scenario]
kind = "symmetric"
n_actions = 2
[learner]
kind = "ekf_fp"
[run]
iterations = 20
replications = 5
"""


def write(tmp_path, text, name="c.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_every_bundled_config_loads():
    names = bundled_configs()
    assert {"symmetric2", "corridor", "warehouse", "sensor", "sweep"} <= set(names)
    for name in names:
        cfg = load_config(name)
        assert (cfg.run is None) == (cfg.scenario_kind == "tracking")


def test_unknown_keys_and_schema_rejected():
    base = {"schema_version": 1, "scenario": {"kind": "symmetric"}, "learner": {"kind": "ekf_fp"}}
    assert parse_config(base, "x").run is not None
    for bad in (
        {**base, "extra": 1},
        {**base, "schema_version": 2},
        {**base, "run": {"iterations": 10, "rounds": 4}},
        {**base, "learner": {"kind": "ekf_fp", "xii": 0.1}},
        {**base, "scenario": {"kind": "chess"}},
    ):
        with pytest.raises(ConfigurationError):
            parse_config(bad, "x")


def test_missing_config_is_usage_error(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(tmp_path / "nope.toml"), "--out", str(out)]) == 2
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_bad_arguments_exit_two(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--config", "symmetric2", "--jobs", "0"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_run_writes_outputs_and_is_reproducible(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_RUN)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out", str(a), "--seed", "4"]) == 0
    assert main(["run", "--config", cfg, "--out", str(b), "--seed", "4"]) == 0
    assert (a / "traces.csv").read_bytes() == (b / "traces.csv").read_bytes()
    rows = list(csv.DictReader(open(a / "traces.csv")))
    assert len(rows) == 5 * 20 * 2
    metrics = list(csv.DictReader(open(a / "metrics.csv")))
    assert metrics and "converged" in capsys.readouterr().out


def test_out_dir_from_environment(tmp_path, monkeypatch):
    target = tmp_path / "env-out"
    monkeypatch.setenv("EKFFP_OUT", str(target))
    assert main(["run", "--config", write(tmp_path, SMALL_RUN)]) == 0
    assert (target / "traces.csv").exists()


def test_sweep_command(tmp_path, capsys):
    cfg = write(tmp_path, """
schema_version = 1
[sweep]
xi = [0.1, 0.3]
zeta = [0.3, "1/t"]
seeds = [0]
horizon = 400
switch_points = [100, 300]
""")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "sweep.csv")))
    assert len(rows) == 1 + 4
    assert "argmin" in capsys.readouterr().out


def test_empty_sweep_grid_is_usage_error(tmp_path):
    cfg = write(tmp_path, "schema_version = 1\n[sweep]\nxi = []\nzeta = [0.1]\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o" / "sweep.csv").exists()


def test_nash_command(capsys):
    assert main(["nash", "--config", "symmetric2"]) == 0
    assert "(U,L), (D,R)" in capsys.readouterr().out
    assert main(["nash", "--config", "matching_pennies"]) == 0
    assert "none" in capsys.readouterr().out


def test_nash_refuses_large_games(tmp_path):
    cfg = write(tmp_path, """
schema_version = 1
[scenario]
kind = "symmetric"
n_actions = 3
[learner]
kind = "ekf_fp"
[nash]
cap = 4
""")
    assert main(["nash", "--config", cfg]) == 2


def test_verify_reports_failures(capsys):
    # the largest-increment check fails for three or more actions
    assert main(["verify"]) == 1
    out = capsys.readouterr().out
    assert "(2 actions)" in out and "FAIL" in out
