"""Command line entry point: ``sica simulate | optimize | validate``.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 stability
violation, 5 optimizer did not converge (outputs still written), 6 a
validation check failed, 1 anything else. Failures also print a one-line
JSON object ``{"error": <category>, "message": ...}`` on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

from .config import default_scenario, dump_config, load_config
from .errors import NonConvergenceWarning, SicaError
from .runner import run_scenario
from .validation import format_table, run_validation

EXIT_CODES = {
    "parse_error": 2,
    "validation_error": 3,
    "stability_violation": 4,
    "nonconvergence": 5,
    "validation_failed": 6,
}


def _fail(category: str, message: str) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return EXIT_CODES.get(category, 1)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML scenario file")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    common.add_argument("--seed", type=int, default=0,
                        help="reserved; only seeds the random vectors of `validate`")
    common.add_argument("--snapshot-stride", type=int, metavar="N",
                        help="write field snapshots every N time levels")
    common.add_argument("--control-const", type=float, metavar="X",
                        help="constant control value (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="sica", description="Spatiotemporal SICA model: simulation and optimal treatment")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run with a constant control")
    sub.add_parser("optimize", parents=[common], help="forward-backward sweep optimization")
    sub.add_parser("validate", parents=[common], help="run the self-check suites")
    sub.add_parser("dump-config", parents=[common],
                   help="print the fully resolved scenario as YAML")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else default_scenario()
        cfg = cfg.with_output(args.out, args.snapshot_stride)
        if args.command == "simulate":
            cfg = cfg.with_control("constant", args.control_const)
        elif args.command == "optimize":
            cfg = cfg.with_control("optimize")
        elif args.control_const is not None:
            cfg = cfg.with_control("constant", args.control_const)

        if args.command == "dump-config":
            sys.stdout.write(dump_config(cfg))
            return 0

        if args.command == "validate":
            results = run_validation(cfg, seed=args.seed)
            print(format_table(results))
            if all(r.passed for r in results):
                return 0
            return _fail("validation_failed",
                         ", ".join(r.name for r in results if not r.passed))

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NonConvergenceWarning)
            report = run_scenario(cfg)
        summary = {
            "mode": report.mode,
            "J": report.J,
            "wall_time_s": round(report.wall_time_s, 3),
            "output": cfg.output.directory,
        }
        if report.mode == "optimize":
            summary.update(converged=report.converged, iterations=report.iterations)
        print(json.dumps(summary))
        if any(issubclass(w.category, NonConvergenceWarning) for w in caught):
            return _fail("nonconvergence", str(caught[-1].message))
        return 0
    except SicaError as exc:
        return _fail(exc.category, str(exc))
    except OSError as exc:
        return _fail("io_error", str(exc))


if __name__ == "__main__":
    sys.exit(main())
