"""Command-line front end: ``ifpbench run|verify|compare|sweep|list-benchmarks``."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .config import BUNDLED, apply_overrides, load_config, parse_value
from .engine import EventLog
from .errors import IfpBenchError
from .ifp.matrix import ROWS, capability_matrix, format_matrix
from .runner import format_sweep_table, run_config, sweep
from .verify import format_verdicts, verify_run
from .workload import PROGRAM_HELP


def _load(args) -> dict:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.horizon is not None:
        overrides.append(f"runtime.horizon={args.horizon}")
    return apply_overrides(load_config(args.config), overrides)


def cmd_run(args) -> int:
    result = run_config(_load(args), args.out)
    s = result.summary
    lat = s["latency"]
    print(f"run {result.plan.run_id}: {s['settled']}/{s['transfers']} settled, "
          f"p50={lat['p50']} p95={lat['p95']} goodput={s['goodput_per_tick']:.4f}/tick")
    print(format_verdicts(result.verdicts.verdicts))
    if args.out:
        print(f"outputs written to {args.out}")
    return result.exit_code


def cmd_verify(args) -> int:
    verdicts = verify_run(EventLog.load(args.log))
    print(format_verdicts(verdicts.verdicts))
    return 0 if verdicts.mandatory_pass else 1


def cmd_compare(args) -> int:
    attrs = None
    if args.attributes:
        attrs = [a.strip() for a in args.attributes.split(",") if a.strip()]
        known = [label for _, label, _ in ROWS]
        unknown = [a for a in attrs if a not in known]
        if unknown:
            print(f"unknown attribute(s): {', '.join(unknown)}; known: {', '.join(known)}",
                  file=sys.stderr)
            return 2
    print(format_matrix(capability_matrix(include_reference=not args.published_only), attrs), end="")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    values = [parse_value(v) for v in args.values.split(",") if v.strip()] if args.values else []
    results, table = sweep(cfg, args.parameter, values, args.out)
    print(format_sweep_table(args.parameter, table))
    return 0 if all(r.verdicts.mandatory_pass for r in results) else 1


def cmd_list(args) -> int:
    for name, text in PROGRAM_HELP.items():
        print(f"{name}\n    {text}")
    print("\nbundled configs: " + ", ".join(BUNDLED))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ifpbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p):
        p.add_argument("--config", default="notary_ctp",
                       help="config file, or a bundled config name (default: notary_ctp)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--horizon", type=int, help="override runtime.horizon")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field by dotted path (repeatable)")

    p = sub.add_parser("run", help="execute one benchmark run")
    run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="re-check a saved event log")
    p.add_argument("log", help="path to an events.log file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="print the IFP capability matrix")
    p.add_argument("--attributes", help="comma-separated attribute rows to show")
    p.add_argument("--published-only", action="store_true", help="omit the reference bridges")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="run once per parameter value")
    run_flags(p)
    p.add_argument("--parameter", required=True, help="dotted config path, e.g. workload.rate")
    p.add_argument("--values", default="", help="comma-separated values (JSON literals)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("list-benchmarks", help="describe the workload programs")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IfpBenchError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
