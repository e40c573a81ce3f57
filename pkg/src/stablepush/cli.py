"""Command-line front end.

Subcommands:
  run      - one pushing episode, exports trajectory CSV and metrics JSON
  compare  - NMPC vs reactive over an episode set, emits a comparison report
  sweep    - open-loop curvature sweep, emits (k, slide distance) CSV
  cone     - print the motion cone and rotation-center feasibility report

Exit codes: 0 success, 1 invalid input, 2 episode failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import DomainError, ScenarioError
from .mechanics import (
    ContactConfig,
    LimitSurface,
    curvature_bounds,
    gamma_integral,
    motion_cone,
    single_point_icr_feasible_set,
)
from .scenario_io import ScenarioFile, load_scenario_file
from .simulator import Trajectory, curvature_sweep, run_closed_loop

__all__ = ["main", "TRAJECTORY_HEADER"]

TRAJECTORY_HEADER = "t,x_r,y_r,theta_r,v_r,omega_r,a_r,xi_r,x_o,y_o,theta_o,contact_mode"


def _fmt(x: float) -> str:
    return repr(float(x))


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("STABLEPUSH_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    lines = [TRAJECTORY_HEADER]
    for s in traj.samples:
        lines.append(
            ",".join(
                [
                    _fmt(s.t),
                    _fmt(s.robot.x),
                    _fmt(s.robot.y),
                    _fmt(s.robot.theta),
                    _fmt(s.robot.v),
                    _fmt(s.robot.omega),
                    _fmt(s.control.a),
                    _fmt(s.control.xi),
                    _fmt(s.object.x),
                    _fmt(s.object.y),
                    _fmt(s.object.theta),
                    s.contact_mode,
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")


def metrics_dict(traj: Trajectory, seed: int) -> dict:
    m = traj.metrics
    clearance = m.min_obstacle_clearance
    return {
        "success": m.success,
        "path_length_m": m.path_length,
        "elapsed_time_s": m.elapsed_time,
        "slide_distance_m": m.slide_distance,
        "reposition_count": m.reposition_count,
        "min_obstacle_clearance_m": None if math.isinf(clearance) else clearance,
        "reason": m.reason,
        "seed": seed,
    }


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    sf = load_scenario_file(args.scenario)
    episode = args.episode
    scenario = sf.build_scenario(episode)
    controller = sf.build_controller(scenario, args.controller)
    traj = run_closed_loop(scenario, controller)
    out = _out_dir(args)
    tag = scenario.name
    csv_path = out / f"trajectory_{tag}.csv"
    write_trajectory_csv(csv_path, traj)
    metrics_path = out / f"metrics_{tag}.json"
    metrics_path.write_text(json.dumps(metrics_dict(traj, sf.seed), indent=2) + "\n")
    m = traj.metrics
    print(
        f"episode {tag}: {'success' if m.success else 'FAILED'} ({m.reason}); "
        f"path {m.path_length:.3f} m, time {m.elapsed_time:.2f} s, "
        f"slide {m.slide_distance:.2e} m, repositions {m.reposition_count}"
    )
    print(f"wrote {csv_path} and {metrics_path}")
    return 0 if m.success else 2


def cmd_compare(args) -> int:
    sf = load_scenario_file(args.scenario)
    episodes = sf.episode_names or [None]
    controllers = [c.strip() for c in args.controllers.split(",")]
    if len(controllers) != 2:
        raise ScenarioError("controllers", "expected two comma-separated controllers")
    rows = []
    for episode in episodes:
        scenario = sf.build_scenario(episode)
        for which in controllers:
            try:
                traj = run_closed_loop(scenario, sf.build_controller(scenario, which))
                m = traj.metrics
                rows.append(
                    {
                        "episode": episode or sf.name,
                        "controller": which,
                        "success": m.success,
                        "path_length_m": m.path_length,
                        "elapsed_time_s": m.elapsed_time,
                        "slide_distance_m": m.slide_distance,
                        "reposition_count": m.reposition_count,
                        "reason": m.reason,
                    }
                )
            except Exception as exc:  # noqa: BLE001 - record, never abort the batch
                rows.append(
                    {
                        "episode": episode or sf.name,
                        "controller": which,
                        "success": False,
                        "path_length_m": math.nan,
                        "elapsed_time_s": math.nan,
                        "slide_distance_m": math.nan,
                        "reposition_count": 0,
                        "reason": f"error: {exc}",
                    }
                )
    report = build_report(rows, controllers)
    out = _out_dir(args)
    csv_path = out / "compare.csv"
    header = "episode,controller,success,path_length_m,elapsed_time_s,slide_distance_m,reposition_count,reason"
    lines = [header]
    for r in rows:
        lines.append(
            ",".join(
                [
                    r["episode"],
                    r["controller"],
                    str(r["success"]),
                    _fmt(r["path_length_m"]),
                    _fmt(r["elapsed_time_s"]),
                    _fmt(r["slide_distance_m"]),
                    str(r["reposition_count"]),
                    r["reason"].replace(",", ";"),
                ]
            )
        )
    csv_path.write_text("\n".join(lines) + "\n")
    (out / "compare_report.json").write_text(json.dumps(report, indent=2) + "\n")

    for r in rows:
        status = "ok " if r["success"] else "FAIL"
        print(
            f"{r['episode']:>12s} {r['controller']:>9s} {status} "
            f"path {r['path_length_m']:7.3f} m  time {r['elapsed_time_s']:7.2f} s  "
            f"repositions {r['reposition_count']}"
        )
    agg = report["aggregates"]
    for which in controllers:
        a = agg[which]
        print(
            f"{which}: mean path {a['mean_path_length_m']:.3f} m, "
            f"mean time {a['mean_elapsed_time_s']:.2f} s, "
            f"success rate {a['success_rate'] * 100:.0f}%"
        )
    sav = report["savings"]
    print(
        f"savings of {controllers[0]} vs {controllers[1]}: "
        f"distance {sav['distance_pct']:.1f}%, time {sav['time_pct']:.1f}%"
    )
    print(f"wrote {csv_path}")
    return 0


def build_report(rows: list[dict], controllers: list[str]) -> dict:
    aggregates = {}
    for which in controllers:
        sub = [r for r in rows if r["controller"] == which]
        aggregates[which] = {
            "mean_path_length_m": _mean(r["path_length_m"] for r in sub),
            "mean_elapsed_time_s": _mean(r["elapsed_time_s"] for r in sub),
            "success_rate": _mean(1.0 if r["success"] else 0.0 for r in sub),
        }
    first, second = controllers[0], controllers[1]
    savings = {}
    for key, name in (("mean_path_length_m", "distance_pct"), ("mean_elapsed_time_s", "time_pct")):
        base = aggregates[second][key]
        savings[name] = 100.0 * (base - aggregates[first][key]) / base if base else 0.0
    return {"rows": rows, "aggregates": aggregates, "savings": savings}


def cmd_sweep(args) -> int:
    sf = load_scenario_file(args.scenario)
    scenario = sf.build_scenario(args.episode)
    settings = sf.sweep_settings
    k_min = settings["k_min"] if args.k_min is None else args.k_min
    k_max = settings["k_max"] if args.k_max is None else args.k_max
    steps = settings["steps"] if args.steps is None else args.steps
    speed = settings["speed_mps"] if args.speed is None else args.speed
    duration = settings["duration_s"] if args.duration is None else args.duration
    if k_min > k_max:
        raise ScenarioError("sweep.k_min", "k_min must not exceed k_max")
    if steps < 1 or (steps < 2 and k_max > k_min):
        raise ScenarioError("sweep.steps", "need at least 2 steps to span a range")
    ks = [k_min] if k_min == k_max else list(np.linspace(k_min, k_max, steps))
    table = curvature_sweep(scenario, ks, speed=speed, duration=duration)
    out = _out_dir(args)
    csv_path = out / "sweep.csv"
    lines = ["k,slide_distance_m"] + [f"{_fmt(k)},{_fmt(s)}" for k, s in table]
    csv_path.write_text("\n".join(lines) + "\n")
    k_dprime, k_prime = curvature_bounds(scenario.contact)
    print(f"curvature bounds: k'' = {k_dprime:.4f}, k' = {k_prime:.4f}")
    for k, s in table:
        print(f"k = {k:6.3f}  slide = {s:.6f} m")
    print(f"wrote {csv_path}")
    return 0


def cmd_cone(args) -> int:
    theta = math.radians(args.theta_mu)
    if args.theta_mu == 0.0:
        report = {
            "degenerate": True,
            "k_prime": 0.0,
            "k_dprime": 0.0,
            "note": "zero friction angle: straight-line pushing only",
        }
        if args.as_json:
            print(json.dumps(report, indent=2))
        else:
            print("degenerate cone (theta_mu = 0): straight-line pushing only; k' = k'' = 0")
        return 0
    cfg = ContactConfig.from_geometry(
        d_ro=args.d_ro, W_o=args.w_o, L_o=args.l_o, theta_mu=theta, y_o=args.y_o
    )
    gamma = gamma_integral(args.patch_width or args.w_o, args.patch_length or args.l_o)
    ls = LimitSurface(args.mu_g, args.mass_kg * 9.81, gamma)
    k_dprime, k_prime = curvature_bounds(cfg)
    mc = motion_cone(cfg, ls)
    report: dict = {
        "degenerate": False,
        "k_prime": k_prime,
        "k_dprime": k_dprime,
        "edge_ccw": list(mc.edge_ccw),
        "edge_cw": list(mc.edge_cw),
        "gamma_g": gamma,
    }
    if args.single_point:
        d = args.contact_d if args.contact_d is not None else cfg.L_o / 2
        icr = single_point_icr_feasible_set((-cfg.W_o / 2, d), cfg, gamma)
        report["single_point"] = {
            "contact_point": list(icr.contact_point),
            "parallel": icr.parallel,
            "shared_icr": list(icr.shared_icr) if icr.shared_icr else None,
            "feasible_modes": list(icr.feasible_modes),
            "restriction": (
                "single-point contact restricts stable pushing to straight-forward "
                "motion or rotation about the single shared rotation center"
            ),
        }
    if args.as_json:
        print(json.dumps(report, indent=2))
        return 0
    print(f"motion cone for theta_mu = {args.theta_mu:.2f} deg, d_ro = {args.d_ro:.3f} m, y_o = {args.y_o:.3f} m")
    print(f"  k'  = {k_prime:.4f} 1/m")
    print(f"  k'' = {k_dprime:.4f} 1/m")
    print(f"  edge_ccw (v_x, v_y, omega) = ({mc.edge_ccw[0]:.6f}, {mc.edge_ccw[1]:.6f}, {mc.edge_ccw[2]:.6f})")
    print(f"  edge_cw  (v_x, v_y, omega) = ({mc.edge_cw[0]:.6f}, {mc.edge_cw[1]:.6f}, {mc.edge_cw[2]:.6f})")
    if args.single_point:
        sp = report["single_point"]
        print("single-point contact analysis:")
        if sp["parallel"]:
            print("  rotation-center lines parallel: straight-line pushing only")
        else:
            print(f"  shared rotation center: ({sp['shared_icr'][0]:.3f}, {sp['shared_icr'][1]:.3f})")
        print(f"  feasible modes: {', '.join(sp['feasible_modes']) or 'none'}")
        print(f"  {sp['restriction']}")
    return 0


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stablepush", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one pushing episode")
    p_run.add_argument("scenario")
    p_run.add_argument("--episode", default=None, help="episode name from the file")
    p_run.add_argument("--controller", default=None, choices=["nmpc", "reactive"])
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="compare controllers over an episode set")
    p_cmp.add_argument("scenario")
    p_cmp.add_argument("--controllers", default="nmpc,reactive")
    p_cmp.add_argument("--out", default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_swp = sub.add_parser("sweep", help="open-loop curvature sweep")
    p_swp.add_argument("scenario")
    p_swp.add_argument("--episode", default=None)
    p_swp.add_argument("--k-min", type=float, default=None, dest="k_min")
    p_swp.add_argument("--k-max", type=float, default=None, dest="k_max")
    p_swp.add_argument("--steps", type=int, default=None)
    p_swp.add_argument("--speed", type=float, default=None)
    p_swp.add_argument("--duration", type=float, default=None)
    p_swp.add_argument("--out", default=None)
    p_swp.set_defaults(func=cmd_sweep)

    p_cone = sub.add_parser("cone", help="print the motion cone report")
    p_cone.add_argument("--theta-mu", type=float, required=True, dest="theta_mu",
                        help="friction-cone half angle (degrees)")
    p_cone.add_argument("--d-ro", type=float, default=0.66, dest="d_ro")
    p_cone.add_argument("--y-o", type=float, default=0.0, dest="y_o")
    p_cone.add_argument("--w-o", type=float, default=0.32, dest="w_o")
    p_cone.add_argument("--l-o", type=float, default=0.48, dest="l_o")
    p_cone.add_argument("--mu-g", type=float, default=0.5, dest="mu_g")
    p_cone.add_argument("--mass-kg", type=float, default=2.8, dest="mass_kg")
    p_cone.add_argument("--patch-width", type=float, default=None)
    p_cone.add_argument("--patch-length", type=float, default=None)
    p_cone.add_argument("--single-point", action="store_true", dest="single_point")
    p_cone.add_argument("--contact-d", type=float, default=None, dest="contact_d")
    p_cone.add_argument("--json", action="store_true", dest="as_json")
    p_cone.set_defaults(func=cmd_cone)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ScenarioError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
