"""Command-line entry points for every pipeline stage.

Subcommands: extract, frontier, utility, recommend, leaderboard, statics,
sweep, serve. Exit codes: 0 success, 2 usage, 3 missing file, 4 invalid
input, 5 internal failure. MLC_LOG sets the log level.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys

import numpy as np

from . import bundle as bundle_mod
from . import planner
from .catalog import (
    CatalogError, Scenario, load_catalog, load_interactions, load_scenario, load_schema,
)
from .frontier import FrontierConfig, FrontierError, estimate_frontier
from .measures import ExtractionConfig, MeasureError, extract_measures
from .numerics import pearson, spearman
from .stylized import StylizedError
from .utility import (
    BoostConfig, UtilityError, auc, binarize_within_user, fit_boosted_trees,
    fit_logistic, group_contexts, predict_many, stratified_split,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_INVALID_INPUT = 4
EXIT_FAILURE = 5

log = logging.getLogger("deployselect")


def _setup_logging():
    level = os.environ.get("MLC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _require(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deployselect")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="fit internal measures from a models CSV")
    p.add_argument("--models", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--factors", type=int, default=2)
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--max-per-row", type=int, default=None)
    p.add_argument("--bypass", action="store_true",
                   help="capabilities are already internal measures in [0,1]")
    p.add_argument("--measures-csv", default=None,
                   help="also export measures as CSV (model_id, C1..CI)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("frontier", help="estimate the capability-cost frontier")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tiers", type=int, default=3)
    p.add_argument("--tolerance", type=float, default=0.0)
    p.add_argument("--aggregation", choices=("mean", "geomean", "median"), default="median")
    p.add_argument("--tiers-csv", default=None,
                   help="also export per-tier CSV (model_id, tier, efficient, ces_score)")

    p = sub.add_parser("utility", help="fit per-group utility models from interactions")
    p.add_argument("--bundle", required=True)
    p.add_argument("--interactions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grouping", required=True, help="context column defining groups")
    p.add_argument("--estimator", choices=("logistic", "trees"), default="logistic")
    p.add_argument("--binarize", choices=("labels", "within_user", "top_score"),
                   default="labels")
    p.add_argument("--user-key", default="user_id")
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--linear-index", action="store_true",
                   help="score with the normalized linear index instead of probabilities")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("recommend", help="scenario recommendations from a fitted bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("leaderboard", help="deployment-aware leaderboard for a scenario")
    p.add_argument("--bundle", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help=".csv for table, anything else for JSON")

    p = sub.add_parser("statics", help="comparative statics for linear-utility scenarios")
    p.add_argument("--bundle", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="frontier estimation over a config grid")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tiers", default="2,3,4,5")
    p.add_argument("--tolerances", default="0.0")
    p.add_argument("--aggregations", default="median")

    p = sub.add_parser("serve", help="stateless HTTP JSON service over a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    return parser


def cmd_extract(args) -> int:
    schema = load_schema(_require(args.schema))
    catalog = load_catalog(_require(args.models), schema)
    config = ExtractionConfig(
        factor_count=args.factors,
        threshold=args.threshold,
        max_per_row=args.max_per_row,
        bypass=args.bypass,
    )
    measures = extract_measures(catalog, config)
    out = bundle_mod.ArtifactBundle(
        catalog=catalog,
        scaler=measures.scaler,
        loading_matrix=measures.loading_matrix,
        measure_set=measures,
    )
    bundle_mod.save_bundle(out, args.out)
    if args.measures_csv:
        with open(args.measures_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model_id"] + [f"C{i + 1}" for i in range(measures.factor_count)])
            for mid, row in zip(measures.model_ids, measures.measures):
                writer.writerow([mid] + [repr(float(v)) for v in row])
    log.info("extracted %d measures for %d models", measures.factor_count, len(catalog.models))
    return EXIT_OK


def cmd_frontier(args) -> int:
    bundle = bundle_mod.load_bundle(_require(args.bundle))
    if bundle.measure_set is None:
        raise CatalogError("bundle has no measure set; run extract first")
    config = FrontierConfig(
        target_tiers=args.tiers, tolerance=args.tolerance, aggregation=args.aggregation
    )
    fit = estimate_frontier(bundle.measure_set, bundle.catalog, config)
    out = bundle_mod.ArtifactBundle(
        catalog=bundle.catalog,
        scaler=bundle.scaler,
        loading_matrix=bundle.loading_matrix,
        measure_set=bundle.measure_set,
        frontier_fit=fit,
        utility_models=bundle.utility_models,
    )
    bundle_mod.save_bundle(out, args.out)
    if args.tiers_csv:
        from .frontier import ces_score

        with open(args.tiers_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model_id", "tier", "efficient", "ces_score"])
            tiers = fit.tier_structure
            for mid in bundle.catalog.model_ids:
                t = tiers.tiers[mid]
                eff = mid in tiers.efficient.get(t, ())
                score = ces_score(bundle.measure_set.row(mid), fit.a, fit.b)
                writer.writerow([mid, t, str(eff).lower(), repr(score)])
    log.info("frontier fit: b=%.4f d=%.4f c0=%.4f loss=%.3g", fit.b, fit.d, fit.c0, fit.fit_loss)
    return EXIT_OK


def cmd_utility(args) -> int:
    bundle = bundle_mod.load_bundle(_require(args.bundle))
    if bundle.measure_set is None:
        raise CatalogError("bundle has no measure set; run extract first")
    records = load_interactions(_require(args.interactions))
    if args.binarize == "within_user":
        records, constant = binarize_within_user(records, args.user_key)
        if constant:
            log.warning("users with constant scores (all-zero labels): %s", constant)
    elif args.binarize == "top_score":
        # full-marks rule: success means hitting the score ceiling
        missing = [r.interaction_id for r in records if r.score is None]
        if missing:
            raise UtilityError(f"interaction {missing[0]!r} has no score")
        top = max(r.score for r in records)
        records = [
            type(r)(r.interaction_id, r.model_id, r.context, r.score,
                    int(r.score >= top - 1e-9))
            for r in records
        ]
    grouped = group_contexts(records, bundle.measure_set, args.grouping)
    models = {}
    for group in sorted(grouped.groups):
        X, y = grouped.groups[group]
        train, test = stratified_split(X, y, 0.2, seed=args.seed)
        if args.estimator == "logistic":
            model = fit_logistic(X[train], y[train], l2_penalty=args.l2)
        else:
            model = fit_boosted_trees(X[train], y[train], BoostConfig())
        if args.linear_index:
            model = dataclasses.replace(model, linear_index=True)
        try:
            train_auc = auc(y[train], predict_many(model, X[train]))
            test_auc = auc(y[test], predict_many(model, X[test]))
        except UtilityError:
            train_auc = test_auc = float("nan")
        print(f"{group}: n_train={train.size} n_test={test.size} "
              f"train_auc={train_auc:.3f} test_auc={test_auc:.3f} "
              f"weights={np.round(model.normalized_weights, 3).tolist()}")
        models[group] = model
    out = bundle_mod.ArtifactBundle(
        catalog=bundle.catalog,
        scaler=bundle.scaler,
        loading_matrix=bundle.loading_matrix,
        measure_set=bundle.measure_set,
        frontier_fit=bundle.frontier_fit,
        utility_models=models,
    )
    bundle_mod.save_bundle(out, args.out)
    return EXIT_OK


def _loaded_for_planning(path):
    bundle = bundle_mod.load_bundle(_require(path))
    missing = [
        name
        for name, value in (
            ("measure_set", bundle.measure_set),
            ("frontier_fit", bundle.frontier_fit),
            ("utility_models", bundle.utility_models),
        )
        if value is None
    ]
    if missing:
        raise CatalogError(f"bundle is missing fitted artifacts: {missing}")
    return bundle


def _recommendation_payload(bundle, scenario: Scenario) -> dict:
    from .server import evaluate_scenario  # shared with the HTTP service

    return evaluate_scenario(bundle, scenario)


def cmd_recommend(args) -> int:
    bundle = _loaded_for_planning(args.bundle)
    scenario = load_scenario(_require(args.scenario))
    payload = _recommendation_payload(bundle, scenario)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(bundle_mod.canonical_json(
            {"recommendations": payload["recommendations"],
             "targets": payload["targets"],
             "infeasible": payload["infeasible"]}))
        fh.write("\n")
    return EXIT_OK


def cmd_leaderboard(args) -> int:
    bundle = _loaded_for_planning(args.bundle)
    scenario = load_scenario(_require(args.scenario))
    entries = planner.leaderboard(
        bundle.catalog, bundle.measure_set, bundle.utility_models, scenario
    )
    if args.out.endswith(".csv"):
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rank", "model_id", "score", "feasible", "cost"])
            for e in entries:
                writer.writerow([
                    "" if e.rank is None else e.rank,
                    e.model_id,
                    repr(e.score),
                    str(e.feasible).lower(),
                    repr(e.cost_used),
                ])
    else:
        payload = [
            {
                "rank": e.rank,
                "model_id": e.model_id,
                "score": e.score,
                "feasible": e.feasible,
                "cost_used": e.cost_used,
                "utility_by_group": e.utility_by_group,
            }
            for e in entries
        ]
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(bundle_mod.canonical_json(payload))
            fh.write("\n")
    return EXIT_OK


def cmd_statics(args) -> int:
    from .server import sensitivity_payload

    bundle = _loaded_for_planning(args.bundle)
    scenario = load_scenario(_require(args.scenario))
    payload = sensitivity_payload(bundle, scenario)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(bundle_mod.canonical_json(payload))
        fh.write("\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    bundle = bundle_mod.load_bundle(_require(args.bundle))
    if bundle.measure_set is None:
        raise CatalogError("bundle has no measure set; run extract first")
    tiers = [int(t) for t in args.tiers.split(",") if t]
    tolerances = [float(t) for t in args.tolerances.split(",") if t]
    aggregations = [a.strip() for a in args.aggregations.split(",") if a.strip()]
    measures = bundle.measure_set
    catalog = bundle.catalog
    costs = catalog.costs()
    rows = []
    for n_tiers in tiers:
        for tol in tolerances:
            for agg in aggregations:
                config = FrontierConfig(target_tiers=n_tiers, tolerance=tol, aggregation=agg)
                try:
                    fit = estimate_frontier(measures, catalog, config)
                except FrontierError as exc:
                    log.warning("sweep cell (%d, %g, %s) failed: %s", n_tiers, tol, agg, exc)
                    continue
                implied = np.array(
                    [fit.tier_costs[fit.tier_structure.tiers[m] - 1] for m in catalog.model_ids]
                )
                n_eff = sum(len(v) for v in fit.tier_structure.efficient.values())
                rows.append({
                    "tiers": n_tiers,
                    "tolerance": tol,
                    "aggregation": agg,
                    "b": fit.b,
                    "d": fit.d,
                    "fit_error": fit.fit_loss / max(n_eff, 1),
                    "pearson": pearson(implied, costs),
                    "spearman": spearman(implied, costs),
                })
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["tiers", "tolerance", "aggregation", "b", "d",
                            "fit_error", "pearson", "spearman"]
        )
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import run_server

    bundle = _loaded_for_planning(args.bundle)
    run_server(bundle, host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "frontier": cmd_frontier,
    "utility": cmd_utility,
    "recommend": cmd_recommend,
    "leaderboard": cmd_leaderboard,
    "statics": cmd_statics,
    "sweep": cmd_sweep,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except (CatalogError, MeasureError, FrontierError, UtilityError, StylizedError,
            planner.PlannerError, bundle_mod.BundleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("internal failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
