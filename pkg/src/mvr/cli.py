"""
Command-line entry point: ``mvr {plan,optimize,scan,covariance}``.

Every command writes ``summary.json`` into ``--out``; the data files depend
on the command. Exit status is 0 on success, 1 when the scenario is
infeasible and 2 when it cannot be loaded.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .covariance import p_of_theta, propagate_track, window_timeline
from .maneuver import ImpulsePlan, detect_collision
from .optimizer import (
    DesignVector,
    OptimizationError,
    TransferProblem,
    cost_surface,
    derivative_sign_changes,
    multistart,
)
from .scenario import Scenario, ScenarioError, load_scenario
from .twobody import Direction, propagate
from .window import theta_max

IMPULSE_HEADER = ["index", "epoch_s", "x_km", "y_km", "theta_rad", "dvx_kms", "dvy_kms", "dvz_kms", "dv_kms"]
TRAJECTORY_HEADER = ["epoch_s", "x_km", "y_km", "arc_index"]
SURFACE_HEADER = ["dt_s", "dtheta_rad", "j_ce_kms", "j_mi_kms"]
COVARIANCE_HEADER = ["t_s", "p11", "p22", "p33"]

SAMPLES_PER_ARC = 200


def _num(x) -> str:
    x = float(x)
    return repr(x) if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    return obj


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (int, str)) else _num(v) for v in row])


def write_summary(path: Path, summary: dict) -> None:
    text = json.dumps(_json_safe(summary), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


# -- plan / optimize ---------------------------------------------------------


def _impulse_rows(plan: ImpulsePlan):
    for i, imp in enumerate(plan.impulses):
        x, y = imp.position[0], imp.position[1]
        dv = imp.delta_v
        yield [i, imp.epoch, x, y, math.atan2(y, x), dv[0], dv[1], dv[2], imp.magnitude]


def _trajectory_rows(plan: ImpulsePlan, scenario: Scenario):
    for k, arc in enumerate(plan.coast_arcs):
        for tau in np.linspace(0.0, arc.duration, SAMPLES_PER_ARC):
            st = propagate(arc.initial, float(tau), scenario.body)
            yield [st.epoch, st.position[0], st.position[1], k]


def _impulse_report(plan: ImpulsePlan, problem: TransferProblem, scenario: Scenario) -> list[dict]:
    cov = scenario.covariance
    out = []
    for i, imp in enumerate(plan.impulses):
        r = float(np.linalg.norm(imp.position))
        theta = math.atan2(imp.position[1], imp.position[0])
        lo, hi = problem.bounds(r)
        swept = theta - lo if problem.direction is Direction.CCW else hi - theta
        variance = []
        for k in (0, 1):
            try:
                variance.append(p_of_theta(cov.p0[k], cov.r_meas[k], cov.q[k], r, max(0.0, swept), scenario.body))
            except ValueError:
                variance.append(None)
        out.append(
            {
                "index": i,
                "epoch_s": imp.epoch,
                "radius_km": r,
                "theta_rad": theta,
                "theta_min_rad": lo,
                "theta_max_rad": hi,
                "dv_kms": imp.magnitude,
                "predicted_variance": {"p11": variance[0], "p22": variance[1]},
            }
        )
    return out


def _maneuver_command(command: str, scenario: Scenario, out: Path, summary: dict) -> int:
    problem = scenario.problem()
    extra = {}
    if command == "plan":
        x = scenario.initial_guess if scenario.initial_guess is not None else problem.initial_guess()
        x = problem.project(x, scenario.optimizer)
        cost, plan = problem.evaluate(x)
    else:
        try:
            res = multistart(problem, scenario.optimizer, scenario.seeds, scenario.initial_guess, scenario.warm_start)
        except OptimizationError as exc:
            summary.update(status="error", error={"type": "infeasible", "message": str(exc)})
            return 1
        x, cost, plan = res.best, res.best_cost, res.plan
        extra = {
            "termination": res.termination,
            "iterations": res.iterations,
            "cost_history_total": [c.total for c in res.cost_history],
        }
    summary["design"] = {
        "radii_km": x.radii.tolist(),
        "angles_rad": x.angles.tolist(),
        "dts_s": x.dts.tolist(),
        "final_angle_rad": problem.final_angle,
    }
    summary.update(extra)
    if plan is None or not cost.feasible:
        summary.update(status="error", error={"type": "infeasible", "message": cost.failure or "infeasible design"})
        return 1

    write_csv(out / "impulses.csv", IMPULSE_HEADER, _impulse_rows(plan))
    write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, _trajectory_rows(plan, scenario))
    summary.update(
        status="ok",
        cost=cost.as_dict(),
        total_dv_kms=plan.total_dv,
        max_dv_kms=plan.max_dv,
        collisions=[{"arc_index": i, "epoch_s": t} for i, t in detect_collision(plan, scenario.body)],
        reflected_arcs=[i for i, arc in enumerate(plan.coast_arcs) if arc.reflected],
        impulses=_impulse_report(plan, problem, scenario),
    )
    return 0


# -- scan --------------------------------------------------------------------


def _scan_command(scenario: Scenario, out: Path, summary: dict) -> int:
    spec = scenario.scan
    dts = np.linspace(*spec.dt_range_s, spec.dt_points)
    dthetas = np.radians(np.linspace(*spec.dtheta_range_deg, spec.dtheta_points))
    ce, mi = cost_surface(scenario.body, scenario.r_initial, scenario.r_final, dts, dthetas, scenario.direction)
    rows = ([dt, dth, ce[i, j], mi[i, j]] for i, dt in enumerate(dts) for j, dth in enumerate(dthetas))
    write_csv(out / "costsurface.csv", SURFACE_HEADER, rows)

    def slice_report(grid, axis):
        counts = []
        for k in range(grid.shape[1 - axis]):
            vals = grid[:, k] if axis == 0 else grid[k, :]
            finite = vals[np.isfinite(vals)]
            counts.append(derivative_sign_changes(finite) if finite.size > 2 else None)
        return counts

    if not np.any(np.isfinite(ce)):
        summary.update(status="error", error={"type": "infeasible", "message": "no feasible point on the grid"})
        return 1
    i, j = np.unravel_index(np.nanargmin(ce), ce.shape)
    summary.update(
        status="ok",
        grid={"dt_points": len(dts), "dtheta_points": len(dthetas), "feasible_points": int(np.isfinite(ce).sum())},
        minimum_j_ce={"dt_s": dts[i], "dtheta_rad": dthetas[j], "j_ce_kms": ce[i, j], "j_mi_kms": mi[i, j]},
        sign_changes={
            "j_ce_along_dt": slice_report(ce, 0),
            "j_ce_along_dtheta": slice_report(ce, 1),
            "j_mi_along_dt": slice_report(mi, 0),
            "j_mi_along_dtheta": slice_report(mi, 1),
        },
    )
    return 0


# -- covariance --------------------------------------------------------------


def _covariance_command(scenario: Scenario, out: Path, summary: dict) -> int:
    cov = scenario.covariance
    radius = scenario.r_initial
    half = math.pi if scenario.disable_window else theta_max(math.radians(scenario.alpha_deg), scenario.initial_altitude, scenario.body)
    segments = window_timeline(half, radius, scenario.body, cov.revolutions)
    track = propagate_track(cov.p0, scenario.noise(), segments, radius, scenario.body)
    grid = np.union1d(np.linspace(track.times[0], track.times[-1], cov.output_points), [s.end for s in segments])
    write_csv(out / "covariance.csv", COVARIANCE_HEADER, ([t, *track.p_diag(t)] for t in grid))
    summary.update(
        status="ok",
        orbit_radius_km=radius,
        window_half_angle_rad=half,
        segments=[{"start_s": s.start, "end_s": s.end, "in_window": s.in_window} for s in segments],
        fixed_points=[math.sqrt(r * q) for r, q in zip(cov.r_meas, cov.q[:2])],
        window_exits=[{"t_s": t, "p_diag": p.tolist()} for t, p in track.exits],
        closed_form_max_relative_gap=track.closed_form_gap,
    )
    return 0


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvr", description="Windowed multi-impulse transfers between circular orbits.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=["plan", "optimize", "scan", "covariance"])
    parser.add_argument("--scenario", required=True, help="scenario JSON file")
    parser.add_argument("--out", required=True, help="output directory (created if missing)")
    parser.add_argument("--seeds", type=int, default=None, help="extra random starts for optimize")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="set a dotted scenario field, e.g. weights.w_v=2 (repeatable)",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    overrides = list(args.override)
    if args.seeds is not None:
        if args.seeds < 0:
            print("mvr: --seeds must be non-negative", file=sys.stderr)
            return 2
        overrides.append(f"optimizer.seeds={args.seeds}")
    summary: dict = {"command": args.command, "version": __version__, "error": None}

    try:
        scenario = load_scenario(args.scenario, overrides)
    except ScenarioError as exc:
        summary.update(status="error", error={"type": "invalid_scenario", "field": exc.field_name, "message": str(exc)})
        write_summary(out / "summary.json", summary)
        print(f"mvr: {exc}", file=sys.stderr)
        return 2

    summary["scenario"] = scenario.to_dict()
    try:
        if args.command in ("plan", "optimize"):
            code = _maneuver_command(args.command, scenario, out, summary)
        elif args.command == "scan":
            code = _scan_command(scenario, out, summary)
        else:
            code = _covariance_command(scenario, out, summary)
    except ValueError as exc:
        summary.update(status="error", error={"type": "infeasible", "message": str(exc)})
        code = 1
    write_summary(out / "summary.json", summary)
    if code:
        print(f"mvr: {summary['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
