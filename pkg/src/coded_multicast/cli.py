"""Command-line entry point for the rate simulator."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .simulator import PLACEMENTS, SCHEMES, ConfigError, parse_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="coded-multicast",
        description="Average shared-link rate of coded multicasting schemes over a cache-size sweep.",
    )
    ap.add_argument("--config", type=Path, help="key=value settings file; flags override it")
    ap.add_argument("--users", type=int)
    ap.add_argument("--files", type=int)
    ap.add_argument("--packets", type=int)
    ap.add_argument("--cache-sizes", help="comma-separated cache sizes M, in files")
    ap.add_argument("--alpha", type=float, help="Zipf exponent")
    ap.add_argument("--scheme", action="append", choices=SCHEMES, help="repeatable")
    ap.add_argument("--placement", choices=PLACEMENTS)
    ap.add_argument("--grasp-iterations", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--output", help="CSV path (default: stdout)")
    ap.add_argument("--export-dimacs", metavar="DIR", help="dump each trial's conflict graph here")
    ap.add_argument("--bound-only", action="store_true", default=None)
    ap.add_argument("--fix-placement", action="store_true", default=None,
                    help="draw one placement per cache size instead of one per trial")
    ap.add_argument("--no-timestamp", action="store_true", default=None,
                    help="omit wall-clock fields so identical runs give identical CSV")
    ap.add_argument("--bound-form", choices=("literal", "per-subset-max"))
    ap.add_argument("--verify", action="store_true", default=None, help="check XOR decoding on every trial")
    ap.add_argument("--workers", type=int, default=1, help="worker processes for trials")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    overrides = {
        "users": args.users,
        "files": args.files,
        "packets": args.packets,
        "cache_sizes": None,
        "alpha": args.alpha,
        "schemes": tuple(args.scheme) if args.scheme else None,
        "placement": args.placement,
        "grasp_iterations": args.grasp_iterations,
        "trials": args.trials,
        "seed": args.seed,
        "output": args.output,
        "export_dimacs": args.export_dimacs,
        "bound_only": args.bound_only,
        "fix_placement": args.fix_placement,
        "no_timestamp": args.no_timestamp,
        "bound_form": args.bound_form,
        "verify": args.verify,
    }
    try:
        if args.cache_sizes is not None:
            overrides["cache_sizes"] = tuple(float(x) for x in args.cache_sizes.split(",") if x.strip())
        text = args.config.read_text() if args.config else None
        config = parse_config(text, overrides)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    run_experiment(config, workers=args.workers, sink=None if config.output else sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
