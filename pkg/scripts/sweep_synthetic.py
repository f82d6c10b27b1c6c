#!/usr/bin/env python3
"""Frontier-estimation sensitivity sweep on a synthetic frontier family.

Generates models on concentric CES shells (curvature 2.5), fits the frontier
over a grid of tier counts / tolerances / cost aggregations, and prints the
parameter table (b, d, fit error, cost-alignment correlations).

Usage: python scripts/sweep_synthetic.py [--shells N] [--per-shell N]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from deployselect.catalog import Catalog, ModelRecord
from deployselect.frontier import FrontierConfig, estimate_frontier
from deployselect.measures import measures_from_rows
from deployselect.numerics import pearson, spearman


def shell_family(n_shells: int, per_shell: int, curvature: float = 2.5):
    levels = np.linspace(0.75, 0.33, n_shells)
    ids, rows, costs = [], [], []
    i = 0
    for lam in levels:
        for frac in np.linspace(0.05, 0.95, per_shell):
            theta = frac * np.pi / 2
            u = np.array([np.cos(theta), np.sin(theta)]) + 0.06
            s = float((0.5 * u[0] ** curvature + 0.5 * u[1] ** curvature) ** (1 / curvature))
            x = lam * u / s
            ids.append(f"m{i:03d}")
            rows.append(x)
            costs.append(float((lam / levels[-1]) ** 2.2))
            i += 1
    models = tuple(
        ModelRecord(m, {"C1": r[0], "C2": r[1]}, {"price": c}, c)
        for m, r, c in zip(ids, rows, costs)
    )
    catalog = Catalog(models=models, capability_names=("C1", "C2"), cost_names=("price",))
    return catalog, measures_from_rows(ids, rows)


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--shells", type=int, default=6)
    parser.add_argument("--per-shell", type=int, default=12)
    args = parser.parse_args()
    catalog, measures = shell_family(args.shells, args.per_shell)
    costs = catalog.costs()

    header = f"{'tiers':>5} {'tol':>6} {'agg':>8} {'b':>8} {'d':>8} {'fit_err':>10} {'pearson':>8} {'spearman':>9}"
    print(header)
    print("-" * len(header))
    for tiers in (2, 3, 4, 5):
        for tol in (0.0, 0.01):
            for agg in ("median", "mean", "geomean"):
                config = FrontierConfig(target_tiers=tiers, tolerance=tol, aggregation=agg)
                fit = estimate_frontier(measures, catalog, config)
                implied = np.array(
                    [fit.tier_costs[fit.tier_structure.tiers[m] - 1] for m in catalog.model_ids]
                )
                n_eff = sum(len(v) for v in fit.tier_structure.efficient.values())
                print(
                    f"{tiers:>5} {tol:>6.2f} {agg:>8} {fit.b:>8.4f} {fit.d:>8.4f} "
                    f"{fit.fit_loss / max(n_eff, 1):>10.2e} "
                    f"{pearson(implied, costs):>8.3f} {spearman(implied, costs):>9.3f}"
                )
    return 0


if __name__ == "__main__":
    sys.exit(main())
