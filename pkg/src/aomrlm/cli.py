"""``sim`` command line: run scenarios, print the alpha table, build curve files.

Exit codes: 0 ok, 1 invalid input, 2 at least one run failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .experiment import alpha_table, emit_curves, format_alpha_table, run_experiment, write_csv
from .protocol import PROTOCOLS
from .scenario import Scenario, ScenarioError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario", type=Path)
    run.add_argument("--seed", type=int, action="append", help="run this seed (repeatable)")
    run.add_argument("--seeds", type=int, help="run seeds 0..N-1")
    run.add_argument("--protocol", action="append", choices=PROTOCOLS)
    run.add_argument("--out", type=Path, default=Path("results"))
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--trace-messages", action="store_true")
    run.add_argument("--trace-positions", action="store_true")

    alpha = sub.add_parser("alpha-table", help="alpha_min = t_net**(1/K) for a list of K")
    alpha.add_argument("--t-net", type=float, default=2.0**-40)
    alpha.add_argument("--k", type=int, nargs="+", default=list(range(10, 101, 10)))
    alpha.add_argument("--out", type=Path, help="also write the table as CSV")

    curves = sub.add_parser("curves", help="plot-ready CSVs from a results directory")
    curves.add_argument("trace_dir", type=Path)
    curves.add_argument("--out", type=Path)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "alpha-table":
        if not 0 < args.t_net < 1 or any(k < 1 for k in args.k):
            print("error: need 0 < t-net < 1 and positive K values", file=sys.stderr)
            return EXIT_INVALID
        rows = alpha_table(args.t_net, args.k)
        print(format_alpha_table(rows))
        if args.out:
            write_csv(args.out, ["K", "alpha_min", "published", "status"], rows)
        return EXIT_OK

    if args.command == "curves":
        if not args.trace_dir.is_dir():
            print(f"error: {args.trace_dir} is not a directory", file=sys.stderr)
            return EXIT_INVALID
        for name, path in emit_curves(args.trace_dir, args.out).items():
            print(f"{name}: {path}")
        return EXIT_OK

    try:
        scenario = Scenario.load(args.scenario)
    except FileNotFoundError:
        print(f"error: no such scenario file {args.scenario}", file=sys.stderr)
        return EXIT_INVALID
    except ScenarioError as exc:
        print(f"error: invalid scenario field {exc}", file=sys.stderr)
        return EXIT_INVALID
    seeds = args.seed if args.seed else (list(range(args.seeds)) if args.seeds else None)
    outcome = run_experiment(
        scenario, args.out, seeds=seeds, protocols=args.protocol, jobs=args.jobs,
        trace_messages=args.trace_messages, trace_positions=args.trace_positions,
    )
    print(f"{len(outcome['rows'])} runs written to {args.out}")
    return EXIT_RUNTIME if outcome["failed"] else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
