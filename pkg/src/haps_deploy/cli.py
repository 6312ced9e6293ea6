"""Command-line interface: optimize, evaluate, and report visibility.

Outputs are plain CSV/JSON, reproducible byte for byte from (config, seed)
and independent of --threads. Exit codes: 0 success, 1 configuration or
usage error, 2 optimization finished without a threshold-feasible
solution, 3 evaluation positions violate the deployment region.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import crlb, geodesy, optimizer
from .kernels import KERNEL_IMPL
from .scenario import Scenario, ScenarioError, load_scenario

logger = logging.getLogger("haps_deploy")


def _configure_logging():
    level_name = os.environ.get("HAPS_DEPLOY_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _fmt(value) -> str:
    """Full-precision, locale-independent cell formatting."""
    if isinstance(value, float):
        return repr(float(value))  # plain float repr even for numpy scalars
    return str(value)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="scenario config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override RNG seed")
    parser.add_argument("--generations", type=int, default=None, help="override generation count")
    parser.add_argument("--population", type=int, default=None, help="override population size")
    parser.add_argument("--tau", type=float, default=None, help="override bound threshold (m)")
    parser.add_argument("--theta-min", type=float, default=None, help="override elevation mask (deg)")
    parser.add_argument("--out-dir", default="haps_out", help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="evaluation thread cap")


def _overrides(args) -> dict:
    return {
        "seed": args.seed,
        "generations": args.generations,
        "population": args.population,
        "tau": args.tau,
        "theta_min": args.theta_min,
    }


def _load(args) -> Scenario:
    return load_scenario(args.config, overrides=_overrides(args))


def _write_trace_csv(path, trace, baseline: float, n_max: int):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["generation", "best_count", "best_crlb_m"]
        header += [f"best_crlb_count_{k}" for k in range(0, n_max + 1)]
        writer.writerow(header)
        for row in trace:
            cells = [str(row.generation), str(row.best_count), _fmt(row.best_crlb)]
            per_count = dict(row.per_count_best)
            per_count[0] = baseline
            for k in range(0, n_max + 1):
                cells.append(_fmt(per_count[k]) if k in per_count else "")
            writer.writerow(cells)


def _write_front_csv(path, objectives: np.ndarray):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_haps", "avg_crlb_m"])
        for row in objectives:
            writer.writerow([str(int(row[0])), _fmt(float(row[1]))])


def cmd_run(args) -> int:
    scenario = _load(args)
    with open(args.config, "r", encoding="utf-8") as fh:
        config_echo = json.load(fh)

    baseline = crlb.evaluate_configuration(scenario, np.zeros((0, 3))).avg_crlb
    logger.info("satellite-only baseline: %.3f m (kernel: %s)", baseline, KERNEL_IMPL)

    result = optimizer.run(scenario, threads=max(1, args.threads))

    os.makedirs(args.out_dir, exist_ok=True)
    params = scenario.ga
    _write_trace_csv(os.path.join(args.out_dir, "trace.csv"), result.trace, baseline, params.n_max)
    _write_front_csv(os.path.join(args.out_dir, "final_front.csv"), result.final_objectives)

    report = {
        "baseline_crlb_m": baseline,
        "best": {
            "count": result.best_count,
            "avg_crlb_m": result.best_crlb,
            "tau_satisfied": result.tau_satisfied,
            "positions_lla": [[float(v) for v in row] for row in result.best_positions],
        },
        "trace": [
            {
                "generation": row.generation,
                "best_count": row.best_count,
                "best_crlb_m": row.best_crlb,
                "per_count_best": {str(k): v for k, v in sorted(row.per_count_best.items())},
            }
            for row in result.trace
        ],
        "final_front": [[int(r[0]), float(r[1])] for r in result.final_objectives],
        "config_echo": config_echo,
        "overrides": {k: v for k, v in _overrides(args).items() if v is not None},
        "seed": params.seed,
        "tau_m": params.tau,
    }
    with open(os.path.join(args.out_dir, "result.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(
        f"best: {result.best_count} platform(s), avg 3D bound "
        f"{result.best_crlb:.3f} m (baseline {baseline:.3f} m, tau {params.tau} m)"
    )
    if not result.tau_satisfied:
        print("no configuration met the threshold; reporting the lowest bound found")
        return 2
    return 0


def _read_positions(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError("positions file must be a JSON list of [lat, lon, alt] rows")
    if not data:
        return np.zeros((0, 3))
    arr = np.array(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("positions file must be a JSON list of [lat, lon, alt] rows")
    return arr


def cmd_eval(args) -> int:
    scenario = _load(args)
    try:
        positions = _read_positions(args.haps)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: cannot read positions: {exc}", file=sys.stderr)
        return 1

    region = scenario.region
    violations = []
    for k, row in enumerate(positions):
        p = geodesy.GeodeticPosition(float(row[0]), float(row[1]), float(row[2]))
        if not (region.min_alt <= p.alt <= region.max_alt):
            violations.append(
                f"position {k}: altitude {p.alt} m outside the allowed band "
                f"[{region.min_alt}, {region.max_alt}] m"
            )
        elif not geodesy.contains(region, p):
            elev, _ = geodesy.elevation_azimuth(region.center, geodesy.lla_to_ecef(p))
            violations.append(
                f"position {k}: elevation {elev:.3f} deg from the region center "
                f"is below the {region.min_elevation} deg minimum"
            )
    if violations:
        for line in violations:
            print(f"infeasible: {line}", file=sys.stderr)
        return 3

    report = crlb.evaluate_configuration(scenario, positions)
    os.makedirs(args.out_dir, exist_ok=True)

    with open(os.path.join(args.out_dir, "per_receiver.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["receiver", "lat", "lon", "alt_m", "crlb_m",
                         "sat_los", "sat_nlos", "haps_los", "haps_nlos"])
        for r in range(scenario.n_receivers):
            lla = scenario.receivers_lla[r]
            value = report.per_receiver_crlb[r]
            writer.writerow([
                str(r), _fmt(float(lla[0])), _fmt(float(lla[1])), _fmt(float(lla[2])),
                "INFEASIBLE" if np.isinf(value) else _fmt(float(value)),
                str(int(report.sat_los[r])), str(int(report.sat_nlos[r])),
                str(int(report.haps_los[r])), str(int(report.haps_nlos[r])),
            ])

    summary = {
        "avg_crlb_m": report.avg_crlb,
        "n_haps": int(len(positions)),
        "n_haps_visible": report.n_haps_used,
        "per_receiver_crlb_m": [
            None if np.isinf(v) else float(v) for v in report.per_receiver_crlb
        ],
    }
    with open(os.path.join(args.out_dir, "eval.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(f"average 3D bound over {scenario.n_receivers} receivers: {report.avg_crlb:.4f} m")
    for r in range(scenario.n_receivers):
        value = report.per_receiver_crlb[r]
        shown = "INFEASIBLE" if np.isinf(value) else f"{value:.4f} m"
        print(
            f"  receiver {r:2d}: {shown}  sat LOS/NLOS {int(report.sat_los[r])}/"
            f"{int(report.sat_nlos[r])}  haps LOS/NLOS {int(report.haps_los[r])}/"
            f"{int(report.haps_nlos[r])}"
        )
    return 0


def cmd_visibility(args) -> int:
    scenario = _load(args)
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "visibility.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["receiver", "visible_sats", "los", "nlos"])
        for r in range(scenario.n_receivers):
            visible = len(scenario.visible_sats[r])
            los = int(scenario.sat_los_count[r])
            nlos = int(scenario.sat_nlos_count[r])
            writer.writerow([str(r), str(visible), str(los), str(nlos)])
            print(f"receiver {r:2d}: {visible} visible, {los} clear, {nlos} blocked")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haps-deploy",
        description="Joint count-and-placement optimization of stratospheric "
        "ranging platforms for urban GNSS augmentation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the evolutionary optimization")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="evaluate a fixed platform configuration")
    _add_common(p_eval)
    p_eval.add_argument("--haps", required=True, help="JSON file of [lat, lon, alt] rows")
    p_eval.set_defaults(func=cmd_eval)

    p_vis = sub.add_parser("visibility", help="per-receiver satellite visibility table")
    _add_common(p_vis)
    p_vis.set_defaults(func=cmd_visibility)

    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
