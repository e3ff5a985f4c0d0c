"""``pptpsim`` command line.

Exit codes: 0 success, 1 configuration error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import InvariantViolation, ScenarioError
from .engine import Simulation
from .report import emit_csv, emit_summary, format_summary
from .scenario import parse_scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2

METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.json"


def _load(path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e.strerror}") from None
    return parse_scenario(text)


def cmd_validate(args):
    sc = _load(args.scenario)
    Simulation(sc)  # building resolves prices, routes and channel deposits
    print(f"{args.scenario}: ok ({len(sc.nodes)} nodes, {len(sc.links)} links, "
          f"{len(sc.demands)} demands)")


def cmd_run(args):
    sc = _load(args.scenario)
    result = Simulation(sc, seed=args.seed, ticks=args.ticks).run()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / METRICS_FILE).write_text(emit_csv(result.rows))
    (out / SUMMARY_FILE).write_text(emit_summary(result.summary))
    t = result.summary["totals"]
    print(f"wrote {len(result.rows)} metric rows to {out / METRICS_FILE}; "
          f"consumer spend {t['consumer_spend']}u, burned {t['burned']}u")


def cmd_report(args):
    path = Path(args.dir) / SUMMARY_FILE
    try:
        summary = json.loads(path.read_text())
    except (OSError, ValueError) as e:
        raise ScenarioError(f"cannot read {path}: {e}") from None
    sys.stdout.write(format_summary(summary))


def build_parser():
    parser = argparse.ArgumentParser(prog="pptpsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and build a scenario without running it")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate a scenario and write metrics.csv and summary.json")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ticks", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="pretty-print the summary of a finished run")
    p.add_argument("dir")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as e:
        print(f"invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
