"""Rule-based agents in rich, moderate and scarce worlds.

Runs every scenario for a few repetitions and prints mean capability,
action diversity and equality side by side. Capability should fall as the
map gets emptier.

    python demos/scenario_sweep.py --reps 3 --steps 200
"""

from __future__ import annotations

import argparse

import numpy as np

from mmoecon.metrics import capability_mean, equality, mean_diversity
from mmoecon.sim import make_config, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--agents", type=int, default=10)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--backend", default="rule", choices=["random", "rule", "scripted"])
    args = ap.parse_args()

    print(f"{'scenario':<10}{'capability':>12}{'diversity':>11}{'equality':>10}")
    for scenario in ("rich", "moderate", "scarce"):
        cfg = make_config(scenario, agents=args.agents, steps=args.steps, repetitions=args.reps,
                          seed=args.seed, backend=args.backend)
        runs = run(cfg)
        eq = np.mean([equality(m) for m in runs])
        print(f"{scenario:<10}{capability_mean(runs):>12.1f}{mean_diversity(runs):>11.3f}{eq:>10.3f}")


if __name__ == "__main__":
    main()
