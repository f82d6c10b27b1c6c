"""Stateless HTTP JSON service over a fitted artifact bundle.

GET /health, GET /models, GET /frontier, POST /scenario. Responses depend
only on (bundle, request); handlers never mutate the bundle, so the threading
server needs no locks. Fitting is CLI-only.
"""

from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import planner, stylized
from .bundle import ArtifactBundle, bundle_to_dict, canonical_json
from .catalog import CatalogError, Scenario, scenario_from_dict

log = logging.getLogger("deployselect.server")


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if np.isfinite(value) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _target_payload(target: planner.ContinuousTarget) -> dict:
    return jsonable({
        "x": target.x,
        "cost": target.cost,
        "utility": target.utility,
        "objective": target.objective,
        "binding": list(target.binding),
        "solver": target.solver,
        "regimes": list(target.regimes) if target.regimes is not None else None,
    })


def _recommendation_payload(rec: planner.Recommendation) -> dict:
    return jsonable({
        "context": rec.context,
        "target_x": rec.target_x,
        "target_c": rec.target_c,
        "target_utility": rec.target_utility,
        "target_objective": rec.target_objective,
        "selected_model": rec.selected_model,
        "selected_x": rec.selected_x,
        "selected_cost": rec.selected_cost,
        "achieved_utility": rec.achieved_utility,
        "deployment_value": rec.deployment_value,
        "binding": list(rec.binding),
        "infeasible": rec.infeasible,
        "tier": rec.tier,
    })


def _report_payload(report: stylized.SensitivityReport) -> dict:
    return jsonable({
        "W_star": report.W_star,
        "Y_star": report.Y_star,
        "Z_star": report.Z_star,
        "Z_int_star": report.Z_int_star,
        "budget_binding": report.budget_binding,
        "eps_B": report.eps_B,
        "dx_dB": report.dx_dB,
        "spillovers": report.spillovers,
        "dc_dRk": report.dc_dRk,
        "eps_c": report.eps_c,
        "eps_d": report.eps_d,
        "eta_b": report.eta_b,
        "gamma": report.gamma,
    })


def _closed_form_report(bundle: ArtifactBundle, scenario: Scenario, group: str):
    model = bundle.utility_models[group]
    frontier = bundle.frontier_fit
    if not (model.linear_index and planner.stylized_applicable(frontier)):
        return None
    lam_raw = planner._scoring_lambda(scenario, bundle.catalog)
    try:
        _, inst, sol = planner._closed_form_target(
            frontier, model.normalized_weights, scenario, bundle.catalog, lam_raw
        )
    except (planner.PlannerError, stylized.StylizedError):
        return None
    return stylized.sensitivity_report(inst, sol)


def sensitivity_payload(bundle: ArtifactBundle, scenario: Scenario) -> dict:
    out = {}
    for group in sorted(bundle.utility_models):
        report = _closed_form_report(bundle, scenario, group)
        out[group] = None if report is None else _report_payload(report)
    return out


def evaluate_scenario(bundle: ArtifactBundle, scenario: Scenario) -> dict:
    """Pure scenario evaluation: leaderboard, per-context recommendations and
    targets, binding constraints, and sensitivity where the linear solver applies."""
    catalog = bundle.catalog
    measures = bundle.measure_set
    utilities = bundle.utility_models
    frontier = bundle.frontier_fit
    feasible_ids, infeasible = planner.feasible_set(catalog, measures, scenario)
    board = planner.leaderboard(catalog, measures, utilities, scenario)
    contexts = sorted(utilities)
    if scenario.aggregation != "per_type":
        contexts = contexts + ["aggregate"]
    recommendations = {}
    targets = {}
    workspace = None
    needs_grid = not planner.stylized_applicable(frontier) or any(
        not u.linear_index for u in utilities.values()
    ) or scenario.aggregation == "robust"
    if needs_grid:
        try:
            workspace = planner._grid_workspace(frontier, scenario, catalog, frontier.a.size)
        except planner.PlannerError:
            workspace = None
    for ctx in contexts:
        try:
            target = planner.continuous_target(
                frontier, utilities, scenario, ctx, catalog, workspace=workspace
            )
            rec = planner.recommend(
                catalog, measures, utilities, frontier, scenario, ctx, target=target
            )
            recommendations[ctx] = _recommendation_payload(rec)
            targets[ctx] = _target_payload(target)
        except planner.PlannerError as exc:
            recommendations[ctx] = {"context": ctx, "infeasible": True, "error": str(exc)}
            targets[ctx] = None
    return {
        "infeasible": infeasible,
        "feasible_models": feasible_ids,
        "leaderboard": [
            {
                "rank": e.rank,
                "model_id": e.model_id,
                "score": e.score,
                "feasible": e.feasible,
                "cost_used": e.cost_used,
                "utility_by_group": e.utility_by_group,
            }
            for e in board
        ],
        "recommendations": recommendations,
        "targets": targets,
        "sensitivity": sensitivity_payload(bundle, scenario),
    }


def models_payload(bundle: ArtifactBundle) -> dict:
    payload = bundle_to_dict(bundle)
    return {
        "catalog": payload["catalog"],
        "measures": payload.get("measure_set"),
    }


def frontier_payload(bundle: ArtifactBundle) -> dict:
    return bundle_to_dict(bundle).get("frontier_fit")


class _Handler(BaseHTTPRequestHandler):
    server_version = "deployselect"

    @property
    def bundle(self) -> ArtifactBundle:
        return self.server.bundle

    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _send(self, status: int, payload) -> None:
        body = canonical_json(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/health":
            self._send(200, {"status": "ok"})
        elif self.path == "/models":
            self._send(200, models_payload(self.bundle))
        elif self.path == "/frontier":
            self._send(200, frontier_payload(self.bundle))
        else:
            self._send(404, {"error": f"unknown path {self.path}"})

    def do_POST(self):
        if self.path != "/scenario":
            self._send(404, {"error": f"unknown path {self.path}"})
            return
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            data = json.loads(raw.decode("utf-8"))
            scenario = scenario_from_dict(data)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            self._send(400, {"error": f"invalid JSON: {exc}"})
            return
        except CatalogError as exc:
            self._send(400, {"error": str(exc)})
            return
        try:
            self._send(200, evaluate_scenario(self.bundle, scenario))
        except (planner.PlannerError, CatalogError) as exc:
            self._send(400, {"error": str(exc)})


def make_server(bundle: ArtifactBundle, host: str = "127.0.0.1", port: int = 8080):
    server = ThreadingHTTPServer((host, port), _Handler)
    server.bundle = bundle
    return server


def run_server(bundle: ArtifactBundle, host: str = "127.0.0.1", port: int = 8080) -> None:
    server = make_server(bundle, host, port)
    log.info("serving on %s:%d", host, port)
    print(f"serving on http://{host}:{port}")
    try:
        server.serve_forever()
    finally:
        server.server_close()
