import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from whichpath import cli, io
from whichpath.errors import ConfigError
from whichpath.runner import Check, RunReport, compute, run
from whichpath.scenarios import BUILTINS, load_scenario, scenario_from_dict


def whichpath(*args, env=None, cwd=None):
    full_env = dict(os.environ, **(env or {}))
    return subprocess.run(
        [sys.executable, "-m", "whichpath", *args],
        capture_output=True, text=True, env=full_env, cwd=cwd,
    )


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc, indent=2))
    return p


def test_list_shows_every_builtin():
    r = whichpath("list")
    assert r.returncode == 0
    names = [line.split()[0] for line in r.stdout.splitlines()]
    assert names == list(BUILTINS)


@pytest.mark.parametrize("fmt,expected", [
    ("csv", {"patterns.csv", "branches.csv", "sampling.csv", "summary.json", "report.json"}),
    ("json", {"patterns.json", "branches.json", "sampling.json", "summary.json", "report.json"}),
    ("svg", {"patterns.svg", "branches.json", "sampling.json", "summary.json", "report.json"}),
])
def test_run_writes_artifacts(tmp_path, fmt, expected):
    r = whichpath("run", "--scenario", "fig1c", "--out", str(tmp_path), "--format", fmt)
    assert r.returncode == 0, r.stderr
    assert {p.name for p in tmp_path.iterdir()} == expected
    assert "[PASS]" in r.stdout and "[FAIL]" not in r.stdout
    if fmt == "svg":
        root = ET.parse(tmp_path / "patterns.svg").getroot()
        assert root.tag.endswith("svg")


def test_bell_run_writes_report(tmp_path):
    r = whichpath("run", "--scenario", "bell", "--out", str(tmp_path))
    assert r.returncode == 0, r.stderr
    rep = json.loads((tmp_path / "bell.json").read_text())
    assert abs(abs(rep["S"]) - 2 * np.sqrt(2)) < 1e-9
    assert rep["max_marginal_deviation"] < 1e-12


def test_check_passes_for_all_builtins():
    r = whichpath("check")
    assert r.returncode == 0, r.stdout
    assert "FAIL" not in r.stdout


def test_csv_round_trip_is_exact(tmp_path):
    s = load_scenario("fig1b")
    run(s, tmp_path, "csv")
    read = io.read_patterns_csv((tmp_path / "patterns.csv").read_text())
    out = compute(s, RunReport(s.name))
    assert list(read) == [p.label for p in out.patterns]
    assert list(read) == ["total", "cond:0", "cond:1", "cond:+", "cond:-"]
    for p in out.patterns:
        x, d = read[p.label]
        assert np.max(np.abs(x - p.grid.x)) <= 1e-12
        assert np.max(np.abs(d - p.density)) <= 1e-12


def test_bad_csv_header():
    with pytest.raises(ConfigError):
        io.read_patterns_csv("a,b,c\n1,2,x\n")


def test_reruns_are_byte_identical_and_seed_changes_sampling(tmp_path):
    outs = []
    for name, seed in (("a", "5"), ("b", "5"), ("c", "6")):
        r = whichpath("run", "--scenario", "born", "--out", str(tmp_path / name), "--seed", seed)
        assert r.returncode == 0
        outs.append((tmp_path / name / "sampling.csv").read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_environment_variables(tmp_path):
    out = tmp_path / "env-out"
    r = whichpath("run", "--scenario", "born", env={"WHICHPATH_OUT": str(out), "WHICHPATH_SEED": "5"})
    assert r.returncode == 0, r.stderr
    r2 = whichpath("run", "--scenario", "born", "--out", str(tmp_path / "flag"), "--seed", "5")
    assert r2.returncode == 0
    assert (out / "sampling.csv").read_bytes() == (tmp_path / "flag" / "sampling.csv").read_bytes()


def test_missing_scenario_is_a_config_error():
    r = whichpath("run", "--scenario", "no-such-thing", "--out", "unused")
    assert r.returncode == 1
    assert "no-such-thing" in r.stderr


def test_unknown_key_reports_its_line(tmp_path):
    p = write(tmp_path, '{\n  "name": "x",\n  "detector": {\n    "type": "qubit",\n    "colour": 3\n  }\n}\n')
    r = whichpath("run", "--scenario", str(p), "--out", str(tmp_path / "o"))
    assert r.returncode == 1
    assert "colour" in r.stderr and ":5" in r.stderr


def test_unnormalized_amplitudes_are_rejected(tmp_path):
    p = write(tmp_path, {"name": "x", "atom": {"amp_left": [0.6, 0], "amp_right": [0.64, 0]}})
    r = whichpath("run", "--scenario", str(p), "--out", str(tmp_path / "o"))
    assert r.returncode == 1
    assert "must be 1" in r.stderr


def test_malformed_json_and_duplicate_keys(tmp_path):
    r = whichpath("run", "--scenario", str(write(tmp_path, '{"name": "x",')), "--out", str(tmp_path))
    assert r.returncode == 1
    dup = write(tmp_path, '{"name": "x", "name": "y"}', "dup.json")
    r = whichpath("run", "--scenario", str(dup), "--out", str(tmp_path))
    assert r.returncode == 1 and "duplicate" in r.stderr


def test_bad_seed_is_a_config_error():
    r = whichpath("run", "--scenario", "fig1a", "--seed", "-3", "--out", "unused")
    assert r.returncode == 1
    r = whichpath("run", "--scenario", "fig1a", "--seed", "abc", "--out", "unused")
    assert r.returncode == 1


def test_unwritable_output_is_an_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    r = whichpath("run", "--scenario", "fig1a", "--out", str(blocker / "sub"))
    assert r.returncode == 3
    assert "I/O error" in r.stderr


def test_failed_invariant_exits_two(monkeypatch, tmp_path, capsys):
    def fake_run(scenario, out, fmt="csv"):
        rep = RunReport(scenario.name)
        rep.checks.append(Check("norm", False, 1.0, 1e-12))
        return rep

    monkeypatch.setattr(cli, "run", fake_run)
    assert cli.main(["run", "--scenario", "fig1a", "--out", str(tmp_path)]) == 2
    assert "invariant" in capsys.readouterr().err


def test_scenario_validation_rules():
    with pytest.raises(ConfigError, match="readout"):
        scenario_from_dict({"name": "x", "readout": {"theta": 1.0}})
    with pytest.raises(ConfigError, match="eyes_closed"):
        scenario_from_dict({"name": "x", "detector": {"type": "qubit"}, "observers": {"eyes_closed": True}})
    with pytest.raises(ConfigError):
        scenario_from_dict({"name": "x", "detector": {"type": "laser"}})
    with pytest.raises(ConfigError):
        scenario_from_dict({"name": "x", "experiment": "bell", "bell": {"axes": [[0, 0, 0]]}})
    with pytest.raises(ConfigError):
        scenario_from_dict({"name": "", "grid": {"n": 1}})
    s = scenario_from_dict({"name": "x", "atom": {"amp_left": [0.6, 0], "amp_right": [0.8, np.pi / 2]}})
    assert abs(s.amp_right - 0.8j) < 1e-15


def test_detector_seed_follows_master_seed():
    a = load_scenario("fig1d", seed_override=1).detector.seed
    b = load_scenario("fig1d", seed_override=1).detector.seed
    c = load_scenario("fig1d", seed_override=2).detector.seed
    assert a == b != c


def test_summary_contents(tmp_path):
    run(load_scenario("eyes-closed"), tmp_path, "json")
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["self_location"]["Right"] == pytest.approx(0.99, abs=1e-12)
    branches = json.loads((tmp_path / "branches.json").read_text())
    assert [b["label"] for b in branches["Macro2"]] == [
        "Cold/Left/EyesClosedL", "Hot/Right/EyesClosedR",
    ]
    sampling = json.loads((tmp_path / "sampling.json").read_text())
    assert sum(sampling["counts"].values()) == sampling["trials"] == 100_000
