"""Command-line entry point: plan, simulate, batch and export-plots."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import PlannerError
from .maps import FIXTURES, FamilyKind, ScenarioFamily, generate_scenario, load_fixture
from .pddl import problem_to_pddl
from .prediction import BaselinePredictor, ObstacleHistory
from .simulation import (
    HISTORY_WINDOW, OPMThresholds, Outcome, config_to_dict, evaluate_opm, planner_config, run_batch,
    run_closed_loop, trace_from_json,
)
from .streams import PlannerConfig, PlanningSnapshot, plan_with_streams
from .world import load_scenario

log = logging.getLogger("maneuver_planner")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_PLAN = 2
EXIT_COLLISION = 3
EXIT_TIMEOUT = 4

EXIT_CODES = {
    Outcome.GOAL_REACHED: EXIT_OK,
    Outcome.COLLISION: EXIT_COLLISION,
    Outcome.TIMEOUT: EXIT_TIMEOUT,
    Outcome.NO_PLAN_DEADLOCK: EXIT_TIMEOUT,
}


def exit_code(outcome: Outcome) -> int:
    return EXIT_CODES[outcome]


def _add_common(p, batch=False):
    if batch:
        p.add_argument("--family", required=True, choices=[k.value for k in FamilyKind])
        p.add_argument("--n", type=int, default=20)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
    else:
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", help="scenario JSON file or a shipped fixture name")
        src.add_argument("--family", choices=[k.value for k in FamilyKind])
        p.add_argument("--seed", type=int, default=0, help="scenario seed with --family")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON file with planner settings (and optional 'opm' thresholds)")
    p.add_argument("--weight", type=float, help="search weight w >= 1")
    p.add_argument("--max-level", type=int)
    p.add_argument("--margin", type=float, help="collision margin in meters")
    p.add_argument("--opm-thresholds", help="JSON file with OPM bounds")
    p.add_argument("--format", choices=["json", "csv", "both"], default="both")
    p.add_argument("--disable-planner", action="store_true", help="drive the route at constant speed")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields so outputs are reproducible")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maneuver-planner", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plan", help="plan once for a scenario snapshot")
    _add_common(p)
    p.add_argument("--time", type=float, default=0.0, help="snapshot time (s); obstacles move, ego does not")
    p = sub.add_parser("simulate", help="run one closed-loop simulation")
    _add_common(p)
    p = sub.add_parser("batch", help="run a batch of generated scenarios")
    _add_common(p, batch=True)
    p = sub.add_parser("export-plots", help="per-step profile and decision CSVs from a trace")
    p.add_argument("--trace", required=True, help="trace.json written by simulate")
    p.add_argument("--out", required=True)
    return ap


def _read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def effective_config(args, scenario_planner=None):
    """flag > config file > scenario settings > defaults."""
    file_cfg = _read_json(args.config) if args.config else {}
    opm = dict(file_cfg.pop("opm", {}))
    cfg = planner_config(scenario_planner or {})
    cfg = planner_config(file_cfg, cfg)
    flags = {}
    if args.weight is not None:
        flags["weight"] = args.weight
    if args.max_level is not None:
        flags["max_level"] = args.max_level
    if args.margin is not None:
        flags["margin"] = args.margin
    if args.disable_planner:
        flags["enabled"] = False
    cfg = planner_config(flags, cfg)
    if args.opm_thresholds:
        opm.update(_read_json(args.opm_thresholds))
    return cfg, OPMThresholds(**opm)


def _load(args):
    if args.scenario:
        if not os.path.exists(args.scenario) and args.scenario in FIXTURES:
            return load_fixture(args.scenario)
        return load_scenario(args.scenario)
    return generate_scenario(ScenarioFamily(FamilyKind(args.family)), args.seed)


def _echo(out: Path, cfg: PlannerConfig, opm: OPMThresholds, extra=None):
    body = {"planner": config_to_dict(cfg), "opm": asdict(opm)}
    if extra:
        body.update(extra)
    (out / "config.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def snapshot_at(scenario, t: float, dt: float) -> PlanningSnapshot:
    """Ego at its initial state, obstacles at time ``t`` with a short history."""
    ts = np.arange(max(0.0, t - HISTORY_WINDOW), t + 1e-9, dt)
    if ts.size == 0 or abs(ts[-1] - t) > 1e-9:
        ts = np.append(ts, t)
    hs = tuple(ObstacleHistory(o.id, o.footprint, ts, tuple(o.state_at(float(x), scenario.map) for x in ts))
               for o in scenario.obstacles)
    e = scenario.ego
    return PlanningSnapshot(t, e.state, scenario.map, hs, e.route, e.target_speed, e.footprint, scenario.goal_region)


def _traj_json(traj) -> dict:
    return {"id": traj.id, "maneuver": traj.maneuver.value, "cost": traj.cost,
            "t": traj.t.tolist(), "x": traj.x.tolist(), "y": traj.y.tolist(), "theta": traj.theta.tolist(),
            "v": traj.v.tolist(), "a": traj.a.tolist(), "kappa": traj.kappa.tolist()}


def cmd_plan(args) -> int:
    scenario = _load(args)
    cfg, opm = effective_config(args, scenario.planner)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo(out, cfg, opm, {"scenario": scenario.name, "time": args.time})
    snap = snapshot_at(scenario, args.time, cfg.params.dt)
    preds = BaselinePredictor()(snap.histories, snap.lane_map, cfg.params.T, cfg.params.dt)
    result = plan_with_streams(snap, config=cfg, predictions=preds)
    if result.problem is not None:
        (out / "problem.pddl").write_text(problem_to_pddl(result.problem), encoding="utf-8")
    if not result:
        report = {"result": "NoPlan", "levels": result.levels, "reason": result.reason,
                  "streams": [i.schema.name for i in result.instances]}
        (out / "noplan.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        print(f"NoPlan after level {result.levels}: {result.reason}")
        return EXIT_NO_PLAN
    (out / "plan.txt").write_text(result.plan.to_text(), encoding="utf-8")
    body = {"level": result.level, "trajectories": [_traj_json(t) for t in result.trajectories]}
    (out / "trajectories.json").write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
    print(result.plan.to_text(), end="")
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = _load(args)
    cfg, opm = effective_config(args, scenario.planner)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo(out, cfg, opm, {"scenario": scenario.name})
    trace = run_closed_loop(scenario, cfg)
    timing = not args.no_timing
    if args.format in ("json", "both"):
        (out / "trace.json").write_text(json.dumps(trace.to_json(timing), sort_keys=True) + "\n", encoding="utf-8")
    if args.format in ("csv", "both"):
        (out / "trace.csv").write_text(trace.to_csv(timing), encoding="utf-8")
    summary = {"outcome": trace.outcome.value, "steps": len(trace), "collision": trace.collision}
    if len(trace) >= 2:
        summary["opm"] = evaluate_opm(trace, opm).to_json()
    (out / "result.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{scenario.name}: {trace.outcome.value} after {len(trace)} steps")
    return exit_code(trace.outcome)


def cmd_batch(args) -> int:
    cfg, opm = effective_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo(out, cfg, opm, {"family": args.family, "n": args.n, "seed": args.seed})
    summary = run_batch(args.family, args.n, args.seed, cfg, opm, out, args.workers, timing=not args.no_timing)
    s = summary.to_json()
    print(f"{args.family} n={s['n']}: success {s['success_rate']:.2f}, collision {s['collision_rate']:.2f}")
    return EXIT_OK


def plot_rows(trace) -> list:
    ch = trace.channels()
    rows = []
    for i, r in enumerate(trace.records):
        rows.append({"t": f"{ch['t'][i]:.6f}", "v": f"{ch['v'][i]:.6f}",
                     "a_lon": f"{ch['a_lon'][i]:.6f}", "a_lat": f"{ch['a_lat'][i]:.6f}",
                     "jerk_lon": f"{ch['jerk_lon'][i]:.6f}", "jerk_lat": f"{ch['jerk_lat'][i]:.6f}",
                     "decision": r.decision})
    return rows


def decision_segments(trace) -> list:
    segs = []
    for r in trace.records:
        if segs and segs[-1][2] == r.decision:
            segs[-1][1] = r.t
        else:
            segs.append([r.t, r.t, r.decision])
    return segs


def cmd_export_plots(args) -> int:
    trace = trace_from_json(_read_json(args.trace))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = plot_rows(trace)
    with open(out / "profiles.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["t"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    with open(out / "decisions.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_start", "t_end", "decision"])
        for a, b, d in decision_segments(trace):
            w.writerow([f"{a:.6f}", f"{b:.6f}", d])
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


COMMANDS = {"plan": cmd_plan, "simulate": cmd_simulate, "batch": cmd_batch, "export-plots": cmd_export_plots}


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MANEUVER_PLANNER_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (PlannerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
