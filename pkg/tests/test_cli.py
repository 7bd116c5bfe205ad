import csv
import json

import numpy as np
import pytest

from maneuver_planner.cli import main


def run(*args):
    return main([str(a) for a in args])


def test_plan_outputs(tmp_path):
    assert run("plan", "--scenario", "overtake", "--out", tmp_path) == 0
    assert "left_change" in (tmp_path / "plan.txt").read_text()
    assert "(define (problem" in (tmp_path / "problem.pddl").read_text()
    body = json.loads((tmp_path / "trajectories.json").read_text())
    assert len(body["trajectories"][0]["x"]) == 26
    assert (tmp_path / "config.json").exists()


def test_plan_noplan_exit(tmp_path):
    assert run("plan", "--scenario", "blocked", "--out", tmp_path) == 2
    assert json.loads((tmp_path / "noplan.json").read_text())["result"] == "NoPlan"


@pytest.mark.parametrize("name,code", [("empty_road", 0), ("blocked", 3), ("zero_duration", 4)])
def test_simulate_exit_codes(tmp_path, name, code):
    assert run("simulate", "--scenario", name, "--out", tmp_path) == code
    assert json.loads((tmp_path / "result.json").read_text())["steps"] >= 1


def test_flag_overrides_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"weight": 3.0, "margin": 0.5, "opm": {"normal_jerk": 1.2}}))
    out = tmp_path / "o"
    assert run("plan", "--scenario", "empty_road", "--out", out, "--config", cfg, "--weight", 2.0) == 0
    echo = json.loads((out / "config.json").read_text())
    assert echo["planner"]["weight"] == 2.0 and echo["planner"]["margin"] == 0.5
    assert echo["opm"]["normal_jerk"] == 1.2


def test_bad_inputs_exit_one(tmp_path):
    assert run("simulate", "--scenario", tmp_path / "missing.json", "--out", tmp_path) == 1
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run("plan", "--scenario", "empty_road", "--out", tmp_path, "--config", cfg) == 1


def test_simulate_without_timing_is_reproducible(tmp_path):
    for d in ("a", "b"):
        assert run("simulate", "--scenario", "empty_road", "--out", tmp_path / d, "--no-timing") == 0
    assert (tmp_path / "a" / "trace.json").read_bytes() == (tmp_path / "b" / "trace.json").read_bytes()
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()


def test_export_plots_jerk_matches_finite_difference(tmp_path):
    assert run("simulate", "--scenario", "left_turn", "--out", tmp_path / "sim", "--format", "json") == 0
    assert run("export-plots", "--trace", tmp_path / "sim" / "trace.json", "--out", tmp_path / "plots") == 0
    with open(tmp_path / "plots" / "profiles.csv") as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([float(r["t"]) for r in rows])
    for acc, jerk in (("a_lon", "jerk_lon"), ("a_lat", "jerk_lat")):
        a = np.array([float(r[acc]) for r in rows])
        j = np.array([float(r[jerk]) for r in rows])
        assert np.allclose(j[1:], np.diff(a) / np.diff(t), atol=1e-2)
    with open(tmp_path / "plots" / "decisions.csv") as fh:
        segs = list(csv.reader(fh))[1:]
    assert segs[0][2] == rows[0]["decision"] and segs[-1][2] == "Goal"
    assert sum(1 for a, b in zip(segs[:-1], segs[1:]) if a[2] == b[2]) == 0


def test_batch_command(tmp_path):
    assert run("batch", "--family", "go_straight", "--n", 2, "--seed", 3, "--out", tmp_path) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["n"] == 2 and len(list((tmp_path / "traces").iterdir())) == 2
    assert set(json.loads((tmp_path / "timing.json").read_text())) == {"count", "p50", "p95", "max"}
