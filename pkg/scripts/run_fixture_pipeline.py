#!/usr/bin/env python3
"""End-to-end demo on the bundled eight-model conversational fixture.

Builds the artifact bundle (bypass measures, pinned frontier parameters,
per-user-type linear utilities), then prints recommendations and the
deployment-aware leaderboard under the five standard deployment settings.

Usage: python scripts/run_fixture_pipeline.py [--out-dir OUT]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from deployselect.bundle import ArtifactBundle, save_bundle
from deployselect.catalog import Scenario, load_catalog, load_schema
from deployselect.frontier import FrontierFit, peel_and_tier
from deployselect.measures import measures_from_rows
from deployselect.planner import evaluate_policy, leaderboard, recommend
from deployselect.utility import UtilityModel

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

GROUP_WEIGHTS = {
    "ethics": (1.000, 0.000),
    "safety": (0.017, 0.983),
    "general": (0.579, 0.421),
}
FRONTIER = dict(a=(0.53, 0.47), b=2.67, c0=0.49, d=0.21, levels=(0.52, 0.66, 0.79))

SETTINGS = {
    "pure-capability": Scenario(lam=0.0, aggregation="per_type"),
    "cost-aware-low": Scenario(lam=0.05, aggregation="per_type"),
    "cost-aware-high": Scenario(lam=0.5, aggregation="per_type"),
    "constrained-single": Scenario(lam=0.05, compliance_floors={1: 0.5},
                                   aggregation="per_type"),
    "constrained-all": Scenario(lam=0.05, compliance_floors={0: 0.33, 1: 0.33},
                                aggregation="per_type"),
}


def build_bundle() -> ArtifactBundle:
    catalog = load_catalog(FIXTURES / "prism_models.csv",
                           load_schema(FIXTURES / "prism_schema.json"))
    measures = measures_from_rows(
        catalog.model_ids,
        [[m.raw_capabilities["C1"], m.raw_capabilities["C2"]] for m in catalog.models],
    )
    levels = np.array(FRONTIER["levels"])
    frontier = FrontierFit(
        a=np.array(FRONTIER["a"]), b=FRONTIER["b"], tier_levels=levels,
        c0=FRONTIER["c0"], d=FRONTIER["d"],
        tier_costs=(levels / FRONTIER["c0"]) ** (1.0 / FRONTIER["d"]),
        fit_loss=0.0, tier_structure=peel_and_tier(measures, 3, 0.0),
    )
    utilities = {}
    for group, w in GROUP_WEIGHTS.items():
        w = np.asarray(w, dtype=float)
        utilities[group] = UtilityModel(
            kind="linear_logistic", intercept=0.0, coefficients=w.copy(),
            normalized_weights=w / w.sum(), linear_index=True,
        )
    return ArtifactBundle(
        catalog=catalog, scaler=measures.scaler,
        loading_matrix=measures.loading_matrix, measure_set=measures,
        frontier_fit=frontier, utility_models=utilities,
    )


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default=None,
                        help="also write the fixture bundle JSON here")
    args = parser.parse_args()
    bundle = build_bundle()
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_bundle(bundle, out / "fixture_bundle.json")
        print(f"wrote {out / 'fixture_bundle.json'}")

    for name, scenario in SETTINGS.items():
        print(f"\n=== {name} (lambda={scenario.lam}, floors={scenario.compliance_floors}) ===")
        selections = {}
        for group in sorted(bundle.utility_models):
            rec = recommend(bundle.catalog, bundle.measure_set, bundle.utility_models,
                            bundle.frontier_fit, scenario, group)
            selections[group] = rec.selected_model
            target = np.round(rec.target_x, 2) if rec.target_x is not None else None
            print(f"  {group:<8} target x*={target} c*={rec.target_c:.2f}"
                  f" -> {rec.selected_model} (tier {rec.tier},"
                  f" value {rec.deployment_value:.3f})")
        value = evaluate_policy(selections, bundle.utility_models, bundle.catalog,
                                bundle.measure_set, scenario)
        print(f"  per-type deployment value: {value:.3f}")
        board = leaderboard(bundle.catalog, bundle.measure_set, bundle.utility_models,
                            Scenario(lam=scenario.lam,
                                     compliance_floors=scenario.compliance_floors,
                                     aggregation="average"))
        ranked = [e for e in board if e.rank is not None][:3]
        print("  leaderboard top-3:",
              ", ".join(f"{e.rank}. {e.model_id} ({e.score:.2f})" for e in ranked))
    return 0


if __name__ == "__main__":
    sys.exit(main())
