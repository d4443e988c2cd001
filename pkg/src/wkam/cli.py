"""``wkam <verb> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]``.

Exit codes: 0 all criteria pass, 1 some criterion failed, 2 config error, 3 solver error.
"""

from __future__ import annotations

import argparse
import sys

from . import _accel
from .errors import ConfigInvalid, WkamError
from .experiments import KINDS, run_scenario

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def build_parser():
    ap = argparse.ArgumentParser(prog="wkam", description="Weak KAM toolkit for time-periodic Hamiltonians on the circle.")
    ap.add_argument("verb", choices=KINDS + ("run",), help="verification kind; 'run' takes it from the config")
    ap.add_argument("--config", required=True, help="scenario JSON file")
    ap.add_argument("--out", default=None, help="output directory for report.json and CSV artifacts")
    ap.add_argument("--seed", type=int, default=None, help="seed for random probe functions")
    ap.add_argument("--threads", type=int, default=None, help="numba worker threads")
    ap.add_argument("-q", "--quiet", action="store_true", help="suppress per-criterion lines")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads:
        _accel.set_threads(args.threads)
    try:
        report = run_scenario(args.config, None if args.verb == "run" else args.verb, args.out, args.seed)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WkamError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if not args.quiet:
        for line in report.lines():
            print(line)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
