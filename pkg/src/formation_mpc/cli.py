"""Command-line interface: check a scenario, run it, or run a bundled demo."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import engine
from .exceptions import ConfigurationError, EngineError, ScenarioError, TopologyError
from .graph import GraphSpec, gain_condition_report, validate_topology
from .mpc import hurwitz_ok
from .scenario import (
    BUNDLED_SCENARIOS,
    bundled_document_path,
    document_to_scenario,
    load_document,
)

__all__ = ["main"]


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output directory (default: ./<name>_out)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--t-final", type=float, default=None, help="override the run length")
    p.add_argument(
        "--substeps", type=int, default=None, help="integration substeps per control period"
    )
    p.add_argument(
        "--snapshot-mode",
        action="store_true",
        default=None,
        help="freeze transmitted neighbor data over each substep",
    )
    p.add_argument(
        "--p-construction",
        choices=["reciprocal", "literal"],
        default=None,
        help="diagnostic weighting-vector construction",
    )
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formation-mpc",
        description="Formation tracking with distributed observers and constrained MPC",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="validate a scenario document")
    p_check.add_argument("path")

    p_run = sub.add_parser("run", help="run a scenario document")
    p_run.add_argument("path")
    _add_run_flags(p_run)

    p_demo = sub.add_parser("demo", help="run a bundled scenario")
    p_demo.add_argument("name", choices=list(BUNDLED_SCENARIOS))
    _add_run_flags(p_demo)
    return parser


def _overrides_from_args(args) -> dict:
    return {
        "seed": args.seed,
        "t_final": args.t_final,
        "substeps": args.substeps,
        "snapshot_mode": True if args.snapshot_mode else None,
        "p_construction": args.p_construction,
    }


def _cmd_check(path: str) -> int:
    try:
        doc = load_document(path)
    except ScenarioError as exc:
        print(f"schema: FAIL ({exc})")
        return 2

    failures = 0
    try:
        graph = GraphSpec(
            adjacency=np.asarray(doc["graph"]["adjacency"], dtype=float),
            pinning=np.asarray(doc["graph"]["pinning"], dtype=float),
        )
        report = validate_topology(graph)
        if report.reachable:
            print("topology: PASS")
        else:
            print(f"topology: FAIL ({report.message})")
            failures += 1
    except ConfigurationError as exc:
        print(f"topology: FAIL ({exc})")
        failures += 1
        graph = None

    lam = doc["controller"].get("lambda", [])
    if hurwitz_ok(np.asarray(lam, dtype=float)):
        print("sliding-surface polynomial: PASS")
    else:
        print("sliding-surface polynomial: FAIL (not Hurwitz)")
        failures += 1

    scenario = None
    if failures == 0:
        try:
            scenario = document_to_scenario(doc)
            scenario.validate()
            print("scenario build: PASS")
        except (ScenarioError, ConfigurationError, TopologyError) as exc:
            print(f"scenario build: FAIL ({exc})")
            failures += 1

    if failures:
        return 1

    for i, mdl in enumerate(scenario.followers):
        if not mdl.drift_vanishes_at_origin():
            print(f"warning: follower {i+1} drift does not vanish at the origin")
    hold = scenario.faults.hold_period
    horizon = min(scenario.t_final, 20.0) if scenario.t_final > 0 else 2.0
    times = np.arange(0.5 * hold, max(horizon, hold), hold)
    diag = gain_condition_report(
        scenario.graph,
        scenario.faults,
        scenario.leader.s0,
        np.asarray(scenario.c_xi, dtype=float),
        times,
        construction=scenario.p_construction,
    )
    print(f"min Re(eig(L_B)) over samples: {diag.lb_min_eig_real:.6g}")
    print(f"min eig(Q): {diag.q_min_eig:.6g}")
    if diag.condition_theorem1_holds:
        print("observer gain condition: PASS")
    else:
        print(
            "warning: observer gain condition not satisfied numerically "
            f"(needs min c_xi > {1 + diag.kappa_star / diag.kappa0:.4g}); "
            "this is diagnostic only"
        )
    for note in diag.notes:
        print(f"note: {note}")
    return 0


def _write_plotdata(log, out: Path) -> None:
    """Narrow per-figure series files: outputs, error norms, controls."""
    rows = log.t.shape[0]
    m = log.x.shape[1]
    n_in = log.u.shape[2]
    d = log.x.shape[2]

    def dump(name: str, cols: list[str], data: np.ndarray) -> None:
        with (out / name).open("w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in data:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    cols = ["t"] + [f"y_{i+1}_{k+1}" for i in range(m) for k in range(d)] + [
        f"leader_{k+1}" for k in range(d)
    ]
    dump("plotdata_outputs.csv", cols, np.hstack([log.t[:, None], log.x.reshape(rows, -1), log.xi0]))

    cols = (
        ["t", "eps_xi_all", "eps_s_all", "eps_delta_all"]
        + [f"track_true_{i+1}" for i in range(m)]
        + [f"track_est_{i+1}" for i in range(m)]
    )
    dump(
        "plotdata_errors.csv",
        cols,
        np.hstack(
            [
                log.t[:, None],
                np.linalg.norm(log.leps_xi, axis=1)[:, None],
                np.linalg.norm(log.leps_s, axis=1)[:, None],
                np.linalg.norm(log.leps_delta, axis=1)[:, None],
                log.track_true,
                log.track_est,
            ]
        ),
    )

    cols = ["t"] + [f"u_{i+1}_{k+1}" for i in range(m) for k in range(n_in)]
    dump("plotdata_controls.csv", cols, np.hstack([log.t[:, None], log.u.reshape(rows, -1)]))


def _cmd_run(path, args, name_hint: str | None = None) -> int:
    overrides = _overrides_from_args(args)
    recorded = {k: v for k, v in overrides.items() if v is not None}
    try:
        doc = load_document(path)
        scenario = document_to_scenario(doc, overrides)
        scenario.validate()
    except (ScenarioError, ConfigurationError, TopologyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out) if args.out else Path(f"{scenario.name}_out")
    out.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    partial = False
    try:
        log = engine.run(scenario)
    except EngineError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        log = exc.partial_log
        partial = True
        if log is None:
            return 1
    runtime = time.perf_counter() - start

    paths = log.write_csv(out)
    _write_plotdata(log, out)
    if not args.no_plots:
        from .plots import render_figures

        render_figures(log, scenario, out)

    summary = log.summary()
    summary["runtime_s"] = runtime
    summary["overrides"] = recorded
    summary["csv_sha256"] = {
        key: hashlib.sha256(p.read_bytes()).hexdigest() for key, p in paths.items()
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")

    if partial:
        print(f"partial log flushed to {out}")
        return 1
    max_u = max(summary["max_abs_u"]) if summary["max_abs_u"] else 0.0
    print(
        f"{scenario.name}: {summary['rows']} rows, "
        f"max|u|={max_u:.4g}, "
        f"constraint violations={summary['constraint_violations']}, "
        f"runtime={runtime:.1f}s -> {out}"
    )
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "check":
        return _cmd_check(args.path)
    if args.command == "run":
        return _cmd_run(args.path, args)
    if args.command == "demo":
        return _cmd_run(bundled_document_path(args.name), args, name_hint=args.name)
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
