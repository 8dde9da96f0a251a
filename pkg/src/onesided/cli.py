"""Command-line entry point: ``onesided run|summarize|plotdata``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import emit_plotdata, load_config, log_level_from_env, run_experiment
from .data_io import read_results, summarize, write_summary
from .exceptions import ConfigError, OneSidedError

logger = logging.getLogger("onesided")


def _csv_list(text):
    return [s for s in (p.strip() for p in text.split(",")) if s]


def _int_list(text):
    try:
        return [int(s) for s in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onesided", description="One-sided feedback experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid")
    run.add_argument("--config", required=True, help="YAML or JSON run configuration")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1, sequential)")
    run.add_argument("--methods", type=_csv_list, default=None, help="override the method list")
    run.add_argument("--seeds", type=_int_list, default=None, help="override the seed list")

    summ = sub.add_parser("summarize", help="best-alpha summary of a results file")
    summ.add_argument("--results", required=True)
    summ.add_argument("--out", required=True)

    plot = sub.add_parser("plotdata", help="average loss-rate curves of a results file")
    plot.add_argument("--results", required=True)
    plot.add_argument("--out", required=True)
    return parser


def _write_errors(out_dir, errors):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "errors.json").write_text(json.dumps(errors, indent=2) + "\n")


def main(argv=None) -> int:
    logging.basicConfig(level=log_level_from_env(), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "run":
        if args.jobs < 1:
            print("error: --jobs must be >= 1", file=sys.stderr)
            return 2
        try:
            cfg = load_config(args.config)
            outcome = run_experiment(cfg, args.out, jobs=args.jobs, methods=args.methods, seeds=args.seeds)
        except ConfigError as exc:
            _write_errors(args.out, [{"error": "ConfigError", "message": p} for p in exc.problems])
            for p in exc.problems:
                print(f"config error: {p}", file=sys.stderr)
            return 2
        except (OneSidedError, OSError) as exc:
            _write_errors(args.out, [{"error": type(exc).__name__, "message": str(exc)}])
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for e in outcome["errors"]:
            print(f"error: {e.get('run_id', '')} {e['error']}: {e['message']}", file=sys.stderr)
        return outcome["exit_code"]
    try:
        if args.command == "summarize":
            write_summary(summarize(read_results(args.results)), args.out)
        else:
            emit_plotdata(args.results, args.out)
    except (OneSidedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
