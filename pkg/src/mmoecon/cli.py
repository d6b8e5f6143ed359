"""Command line entry point: ``mmoecon run`` and ``mmoecon summarize``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .policy.base import BackendFailure
from .sim.config import BACKENDS, ConfigError, load_config
from .sim.runner import run
from .sim.summarize import MissingRuns, format_table, summarize
from .world import DENSITY_PRESETS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmoecon", description="MMO economy agent simulation")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario for several repetitions")
    r.add_argument("--scenario", choices=sorted(DENSITY_PRESETS))
    r.add_argument("--agents", type=int)
    r.add_argument("--steps", type=int)
    r.add_argument("--reps", type=int, dest="repetitions")
    r.add_argument("--seed", type=int)
    r.add_argument("--backend", choices=BACKENDS)
    r.add_argument("--config", help="TOML config file; flags override its values")
    r.add_argument("--out", dest="output_dir", default=None, help="output directory (default: out)")
    r.add_argument("--workers", type=int, default=1, help="processes for parallel repetitions")

    s = sub.add_parser("summarize", help="aggregate finished runs into summary.csv")
    s.add_argument("--out", dest="output_dir", default="out")
    return parser


def _run(args: argparse.Namespace) -> int:
    config = load_config(args.config, scenario=args.scenario, agents=args.agents, steps=args.steps,
                         repetitions=args.repetitions, seed=args.seed, backend=args.backend,
                         output_dir=args.output_dir)
    if config.output_dir is None:
        config.output_dir = "out"
    results = run(config, workers=args.workers)
    for rep, metrics in enumerate(results):
        s = metrics.summary()
        print(f"{config.scenario_name} rep {rep}: capability={s['capability']:.2f} "
              f"diversity={s['diversity']:.4f} equality={s['equality']:.4f} "
              f"profitability={s['profitability']:.2f}")
    print(f"wrote {config.output_dir}/{config.scenario_name}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _run(args)
        print(format_table(summarize(args.output_dir)))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MissingRuns as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BackendFailure as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
