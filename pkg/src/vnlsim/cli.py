"""Command line entry point: ``vnlsim run|validate|metrics``."""
from __future__ import annotations

import argparse
import json
import sys

from .engine import run_scenario
from .metrics import MetricsError, compute_metrics, emit, read_trace
from .scenario import ScenarioError, bundled_scenarios, load_scenario


def _summary(metrics) -> str:
    lines = []
    for sid, s in sorted(metrics.sessions.items()):
        lines.append(
            f"session {sid}: sent={s.sent} delivered={s.delivered} lost={s.lost} "
            f"expired={s.expired} in_flight={s.in_flight} max_gap_s={s.max_gap_s:.6f} "
            f"interruption_time_s={s.interruption_time_s:.6f}"
        )
    for nid, n in sorted(metrics.nodes.items()):
        if n.handover_latency_s:
            lats = ",".join(f"{x:.6f}" for x in n.handover_latency_s)
            lines.append(f"node {nid}: handover_latency_s={lats}")
    return "\n".join(lines)


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    trace, metrics = run_scenario(scenario, args.seed)
    trace_path, metrics_path = emit(trace, metrics, args.out)
    print(_summary(metrics))
    print(f"wrote {trace_path} ({len(trace)} rows) and {metrics_path}")
    return 0


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    print(
        f"ok: {sc.name}: {len(sc.cells)} cells, {len(sc.nodes)} nodes, "
        f"{len(sc.sessions)} sessions, {sc.duration_s:g} s"
    )
    return 0


def cmd_metrics(args) -> int:
    metrics = compute_metrics(read_trace(args.trace))
    print(json.dumps(metrics.to_dict(), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vnlsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    names = ", ".join(bundled_scenarios())
    p = sub.add_parser("run", help="run a scenario and write trace.csv and metrics.json")
    p.add_argument("--scenario", required=True, help=f"scenario file or bundled name ({names})")
    p.add_argument("--seed", type=int, default=None, help="override the scenario master seed")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="load and check a scenario without running it")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("metrics", help="recompute metrics from a trace.csv")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, MetricsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
