"""Command-line entry point: ``freqsweep {sweep,capacity-sweep,matched-pair,census,plot}``."""

import argparse
import logging
import sys
from pathlib import Path

from . import experiment
from .config import load_config
from .exceptions import FreqSweepError

VERBS = ("sweep", "capacity-sweep", "matched-pair", "census", "plot")


def build_parser():
    p = argparse.ArgumentParser(prog="freqsweep", description="Temporal sampling frequency sweeps for a toy BEV predictor.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("--config", help="YAML or JSON experiment configuration")
    p.add_argument("--out", help="output directory (defaults to the config's output_dir)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for independent runs")
    p.add_argument("--profile", choices=("desk", "full"), default="desk")
    p.add_argument("--input", help="aggregate.csv to plot (plot verb; default <out>/aggregate.csv)")
    p.add_argument("--timing", action="store_true", help="record wall times in raw.csv (breaks byte-determinism)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise FreqSweepError("--threads must be >= 1")
        if args.verb == "plot":
            if not args.out and not args.input:
                raise FreqSweepError("plot needs --out or --input")
            src = Path(args.input) if args.input else Path(args.out) / "aggregate.csv"
            dst = Path(args.out) / "response.svg" if args.out else src.with_name("response.svg")
            if not src.exists():
                raise FreqSweepError(f"{src} does not exist")
            experiment.plot_aggregate(src, dst)
            print(dst)
            return 0
        mode = {"sweep": "sweep", "capacity-sweep": "capacity_sweep", "matched-pair": "matched_pair"}.get(args.verb)
        overrides = {"mode": mode} if mode else None
        config = load_config(args.config, profile=args.profile, overrides=overrides)
        out = args.out or config.output_dir
        if args.verb == "census":
            for f, n in experiment.run_census(config, out):
                print(f"{experiment.fmt_hz(f)} Hz: {n} samples")
        elif args.verb == "sweep":
            table = experiment.run_sweep(config, out, threads=args.threads, record_time=args.timing)
            print(f"f* = {next(iter(table.f_star.values())):g} Hz; results in {out}")
        elif args.verb == "capacity-sweep":
            table = experiment.run_capacity_sweep(config, out, threads=args.threads, record_time=args.timing)
            for w, f in sorted(table.f_star.items()):
                print(f"W={w}: f* = {f:g} Hz")
        else:
            row, _ = experiment.run_matched_pair(config, out, threads=args.threads, record_time=args.timing)
            print(", ".join(f"{k}={v}" for k, v in row.items()))
        return 0
    except FreqSweepError as e:
        print(f"freqsweep: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
