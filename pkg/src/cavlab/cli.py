"""``cavlab <experiment> --config FILE [--lambda --eps2 --tau --m --out --seed]``.

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, ConfigError, parse_config
from .experiments import run
from .fem import StepFailure
from .models import InfeasibleError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cavlab", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--lambda", dest="lam", type=float, help="boundary stretch")
    ap.add_argument("--eps2", type=float, help="penalty parameter eps^2")
    ap.add_argument("--tau", type=float, help="penalty well width")
    ap.add_argument("--m", type=int, help="radial grid cells")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int, help="mesh jitter seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"experiment": args.experiment, "lambda": args.lam, "penalty.eps2": args.eps2,
                 "penalty.tau": args.tau, "grid.m": args.m, "out": args.out, "seed": args.seed}
    try:
        cfg = parse_config(args.config, overrides)
        summary = run(cfg)
    except ConfigError as exc:
        print(f"cavlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepFailure, InfeasibleError, FloatingPointError, RuntimeError, ValueError) as exc:
        print(f"cavlab: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"cavlab: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    energy = summary.get("energy")
    line = f"{cfg.experiment}: wrote {cfg.out}"
    if energy is not None:
        line += f" (energy {energy:.9g})"
    print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
