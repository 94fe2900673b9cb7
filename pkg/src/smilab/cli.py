"""Command-line entry point: ``smilab run|validate <config.json>``.

Exit codes: 0 PASS or REPORT_ONLY, 1 FAIL (a bound was refuted),
2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from smilab.config import parse_config
from smilab.errors import ConfigError
from smilab.runner import Verdict, run

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _build_parser():
    parser = argparse.ArgumentParser(prog="smilab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment and write its reports")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.add_argument("--workers", type=int, default=None, help="worker processes (0 = auto)")
    p_run.add_argument("--seed", type=int, default=None, help="override master_seed")
    p_run.add_argument("--output", default=None, help="override output_path")
    p_run.add_argument("--quiet", action="store_true", help="only print the verdict")

    p_val = sub.add_parser("validate", help="parse and validate a config without running it")
    p_val.add_argument("config", help="path to a JSON experiment config")
    return parser


def _print_rows(rows):
    if not rows:
        return
    keys = list(rows[0])
    print("  ".join(keys))
    for row in rows:
        print("  ".join(f"{row[k]:.6g}" if isinstance(row[k], float) else str(row[k]) for k in keys))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text)
        if args.command == "run":
            overrides = {"master_seed": args.seed, "output_path": args.output}
            if args.workers is not None:
                if args.workers < 0:
                    raise ConfigError("must be >= 0", "workers")
                overrides["workers"] = args.workers
            cfg = cfg.replace(**overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"ok: {cfg.experiment.value}")
        return EXIT_OK

    try:
        report = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        _print_rows(report.rows)
        if report.csv_path:
            print(f"wrote {report.csv_path} and {report.json_path}")
    print(f"{cfg.experiment.value}: {report.verdict} ({report.wall_time:.2f}s, {report.excluded_draws} excluded)")
    return EXIT_FAIL if report.verdict == Verdict.FAIL else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
