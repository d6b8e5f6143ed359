"""Aggregate per-repetition metrics into a per-scenario table."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

import numpy as np


class MissingRuns(FileNotFoundError):
    pass


def collect(out_dir: str | Path) -> dict[str, dict[str, list[float]]]:
    """scenario -> metric -> values over repetitions (blank values skipped)."""
    root = Path(out_dir)
    table: dict[str, dict[str, list[float]]] = {}
    for path in sorted(root.glob("*/rep_*/metrics.csv")):
        scenario = path.parent.parent.name
        per_metric = table.setdefault(scenario, defaultdict(list))
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["value"] != "":
                    per_metric[row["metric"]].append(float(row["value"]))
    if not table:
        raise MissingRuns(f"no metrics.csv files under {root}")
    return {s: dict(m) for s, m in table.items()}


COLUMNS = (
    "capability", "diversity", "profitability", "equality", "auction_mean_price",
    "p2p_mean_price", "price_gap_pearson", "auction_trades", "p2p_trades",
)


def summarize(out_dir: str | Path) -> list[dict[str, object]]:
    """One row per scenario holding each metric's mean over repetitions.

    Also writes ``summary.csv`` next to the scenario directories. A metric
    that is undefined in every repetition (e.g. no P2P trades) is NaN.
    """
    rows = []
    for scenario, metrics in sorted(collect(out_dir).items()):
        row: dict[str, object] = {"scenario": scenario, "repetitions": len(metrics.get("capability", []))}
        for name in COLUMNS:
            values = metrics.get(name, [])
            row[name] = float(np.mean(values)) if values else math.nan
        rows.append(row)
    with open(Path(out_dir) / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["scenario", "repetitions", *COLUMNS], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return rows


def format_table(rows: list[dict[str, object]]) -> str:
    header = ["scenario", "reps", *COLUMNS]
    lines = ["  ".join(f"{h:>18}" if i else f"{h:<10}" for i, h in enumerate(header))]
    for r in rows:
        cells = [f"{r['scenario']:<10}", f"{r['repetitions']:>18}"]
        cells += [f"{r[c]:>18.4f}" for c in COLUMNS]
        lines.append("  ".join(cells))
    return "\n".join(lines)
