"""Deployment planning: continuous capability-cost targets on the fitted
frontier, discrete model recommendations, scenario scoring, and
deployment-aware leaderboards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import stylized
from .catalog import Catalog, Scenario
from .frontier import FrontierFit
from .measures import MeasureSet
from .utility import UtilityModel, utility_values


class PlannerError(ValueError):
    pass


def _floor_vector(scenario: Scenario, dim: int) -> np.ndarray:
    R = np.zeros(dim)
    for k, v in scenario.compliance_floors.items():
        if not (0 <= k < dim):
            raise PlannerError(f"unknown measure index {k} in compliance floors")
        R[k] = v
    return R


def cost_score(raw_cost, scenario: Scenario, catalog: Catalog):
    """Cost as it enters the objective: raw, or min-max normalized over the catalog."""
    raw_cost = np.asarray(raw_cost, dtype=float)
    if scenario.cost_normalization == "raw":
        return raw_cost
    costs = catalog.costs()
    lo, hi = costs.min(), costs.max()
    span = hi - lo if hi > lo else 1.0
    return (raw_cost - lo) / span


def _scoring_lambda(scenario: Scenario, catalog: Catalog) -> float:
    """Lambda against raw cost that matches the scenario's scoring convention."""
    if scenario.cost_normalization == "raw":
        return scenario.lam
    costs = catalog.costs()
    span = costs.max() - costs.min()
    return scenario.lam / span if span > 0 else scenario.lam


def feasible_set(catalog: Catalog, measures: MeasureSet, scenario: Scenario):
    """Models meeting the budget cap and every compliance floor."""
    R = _floor_vector(scenario, measures.factor_count)
    ids = []
    for m in catalog.models:
        x = measures.row(m.model_id)
        if scenario.budget is not None and m.cost > scenario.budget:
            continue
        if np.any(x < R):
            continue
        ids.append(m.model_id)
    return ids, len(ids) == 0


def resolved_weights(scenario: Scenario, groups) -> dict[str, float]:
    """Scenario context weights normalized over the utility groups; uniform default."""
    groups = sorted(groups)
    if scenario.context_weights:
        missing = [g for g in scenario.context_weights if g not in groups]
        if missing:
            raise PlannerError(f"context weights name unknown groups: {missing}")
        weights = {g: scenario.context_weights.get(g, 0.0) for g in groups}
    else:
        weights = {g: 1.0 for g in groups}
    total = sum(weights.values())
    if total <= 0:
        raise PlannerError("context weights sum to zero")
    return {g: w / total for g, w in weights.items()}


def aggregate_objective(utilities: dict[str, UtilityModel], scenario: Scenario):
    """Evaluator f(X, scored_costs) for the average or robust single-policy
    objective; X rows are measure profiles, costs already in scoring units."""
    if not utilities:
        raise PlannerError("no utility groups to aggregate")
    weights = resolved_weights(scenario, utilities.keys())
    order = sorted(utilities)

    def evaluate(X, scored_costs):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        per_group = np.stack([utility_values(utilities[g], X) for g in order])
        if scenario.aggregation == "robust":
            agg = per_group.min(axis=0)
        else:
            w = np.array([weights[g] for g in order])
            agg = w @ per_group
        return agg - scenario.lam * np.asarray(scored_costs, dtype=float)

    return evaluate


@dataclass(frozen=True)
class ContinuousTarget:
    x: np.ndarray
    cost: float  # raw cost units
    utility: float
    objective: float  # in the scenario's scoring convention
    binding: tuple[str, ...]
    solver: str  # closed_form | grid
    regimes: tuple[str, ...] | None = None
    sensitivity: object | None = None


def _binding_labels(R, x, cost, budget, tol=1e-6):
    labels = ["frontier"]
    if budget is not None and cost >= budget - tol * max(1.0, budget):
        labels.append("budget")
    for i in range(len(x)):
        if R[i] > 0 and x[i] <= R[i] + tol:
            labels.append(f"floor:C{i + 1}")
        elif x[i] >= 1.0 - tol:
            labels.append(f"ceiling:C{i + 1}")
    return tuple(labels)


def stylized_applicable(frontier) -> bool:
    """The closed-form solver needs curvature above 1 and returns in (0, 1]."""
    return frontier.b > 1.0 and 0.0 < frontier.d <= 1.0


def _closed_form_target(frontier, beta, scenario, catalog, lam_raw):
    R = _floor_vector(scenario, len(beta))
    c_ones = frontier.c0 ** (-1.0 / frontier.d)
    B = scenario.budget if scenario.budget is not None else 2.0 * c_ones
    inst = stylized.StylizedInstance(
        beta=beta, a=frontier.a, b=frontier.b, c0=frontier.c0, d=frontier.d,
        R=R, B=B, lam=lam_raw,
    )
    if not stylized.check_nondegeneracy(inst)["ok"]:
        raise PlannerError("floors are infeasible against the frontier at the budget cap")
    sol = stylized.solve(inst)
    utility = float(beta @ sol.x_star)
    scored_cost = float(cost_score(sol.c_star, scenario, catalog))
    return ContinuousTarget(
        x=sol.x_star,
        cost=sol.c_star,
        utility=utility,
        objective=utility - scenario.lam * scored_cost,
        binding=_binding_labels(R, sol.x_star, sol.c_star,
                                scenario.budget if scenario.budget is not None else None),
        solver="closed_form",
        regimes=sol.regimes,
        sensitivity=stylized.sensitivity_report(inst, sol),
    ), inst, sol


@dataclass(frozen=True)
class GridWorkspace:
    """Frontier-surface grid shared across the contexts of one scenario."""

    mesh: np.ndarray
    scored_costs: np.ndarray  # for the feasible mesh rows
    feasible: np.ndarray
    pts: int
    group_utilities: dict  # group -> utilities on the feasible mesh rows


def _grid_workspace(frontier, scenario: Scenario, catalog, dim) -> GridWorkspace:
    R = _floor_vector(scenario, dim)
    budget = scenario.budget
    # grid density backs off with dimension to hold the interactive latency budget
    pts = {1: 41, 2: 41, 3: 15}.get(dim, 9)
    axes = [np.linspace(R[i], 1.0, pts) for i in range(dim)]
    mesh = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    levels = np.clip(mesh, 0.0, None) ** frontier.b @ frontier.a
    costs = (np.maximum(levels, 0.0) ** (1.0 / frontier.b) / frontier.c0) ** (1.0 / frontier.d)
    feasible = np.ones(len(mesh), dtype=bool) if budget is None else costs <= budget
    if not np.any(feasible):
        raise PlannerError("floors are infeasible against the frontier at the budget cap")
    return GridWorkspace(
        mesh=mesh,
        scored_costs=np.asarray(cost_score(costs[feasible], scenario, catalog), dtype=float),
        feasible=feasible,
        pts=pts,
        group_utilities={},
    )


def _grid_utilities(workspace: GridWorkspace, group: str, model) -> np.ndarray:
    cached = workspace.group_utilities.get(group)
    if cached is None:
        cached = utility_values(model, workspace.mesh[workspace.feasible])
        workspace.group_utilities[group] = cached
    return cached


def _grid_target(frontier, evaluate, scenario, catalog, dim, workspace=None,
                 grid_objective=None):
    """Search the frontier surface: each profile x is costed at the minimal
    cost attaining it, then refined by shrinking coordinate descent."""
    R = _floor_vector(scenario, dim)
    budget = scenario.budget
    if workspace is None:
        workspace = _grid_workspace(frontier, scenario, catalog, dim)
    mesh, feasible, pts = workspace.mesh, workspace.feasible, workspace.pts
    if grid_objective is None:
        grid_objective = evaluate(mesh[feasible], workspace.scored_costs)
    values = np.full(len(mesh), -np.inf)
    values[feasible] = grid_objective
    best = int(np.argmax(values))
    x = mesh[best].copy()
    step = 1.0 / (pts - 1)
    best_val = values[best]
    for _ in range(50):
        candidates = []
        for i in range(dim):
            for delta in (-step, step):
                cand = x.copy()
                cand[i] = np.clip(cand[i] + delta, R[i], 1.0)
                candidates.append(cand)
        cand = np.array(candidates)
        c_cand = np.array([frontier.min_cost_for(row) for row in cand])
        ok = np.ones(len(cand), dtype=bool) if budget is None else c_cand <= budget
        if np.any(ok):
            vals = np.full(len(cand), -np.inf)
            vals[ok] = evaluate(cand[ok], cost_score(c_cand[ok], scenario, catalog))
            j = int(np.argmax(vals))
            if vals[j] > best_val + 1e-12:
                x, best_val = cand[j], vals[j]
                continue
        step *= 0.8
    cost = frontier.min_cost_for(x)
    objective = float(evaluate(x[None, :], cost_score(np.array([cost]), scenario, catalog))[0])
    utility = objective + scenario.lam * float(cost_score(cost, scenario, catalog))
    return ContinuousTarget(
        x=x,
        cost=float(cost),
        utility=utility,
        objective=objective,
        binding=_binding_labels(R, x, cost, budget),
        solver="grid",
    )


def continuous_target(
    frontier: FrontierFit,
    utilities: dict[str, UtilityModel],
    scenario: Scenario,
    context: str,
    catalog: Catalog,
    workspace: GridWorkspace | None = None,
) -> ContinuousTarget:
    """Ideal capability-cost profile for one context group or the aggregate.

    Linear-index utilities with b > 1 go through the closed-form solver;
    everything else (tree utilities, robust aggregation, b <= 1 frontiers)
    searches the frontier surface on a grid with local refinement. Passing a
    shared workspace reuses per-group grid evaluations across contexts.
    """
    dim = frontier.a.size
    lam_raw = _scoring_lambda(scenario, catalog)
    if context == "aggregate":
        weights = resolved_weights(scenario, utilities.keys())
        linear = all(u.linear_index for u in utilities.values())
        if linear and scenario.aggregation == "average" and stylized_applicable(frontier):
            beta = np.zeros(dim)
            for g, u in utilities.items():
                beta += weights[g] * u.normalized_weights
            target, _, _ = _closed_form_target(frontier, beta, scenario, catalog, lam_raw)
            return target
        evaluate = aggregate_objective(utilities, scenario)
        if workspace is None:
            workspace = _grid_workspace(frontier, scenario, catalog, dim)
        per_group = np.stack([
            _grid_utilities(workspace, g, utilities[g]) for g in sorted(utilities)
        ])
        if scenario.aggregation == "robust":
            agg = per_group.min(axis=0)
        else:
            w = np.array([weights[g] for g in sorted(utilities)])
            agg = w @ per_group
        grid_objective = agg - scenario.lam * workspace.scored_costs
        return _grid_target(frontier, evaluate, scenario, catalog, dim,
                            workspace=workspace, grid_objective=grid_objective)
    if context not in utilities:
        raise PlannerError(f"no utility model for context {context!r}")
    model = utilities[context]
    if model.linear_index and stylized_applicable(frontier):
        target, _, _ = _closed_form_target(
            frontier, model.normalized_weights, scenario, catalog, lam_raw
        )
        return target

    def evaluate(X, scored_costs):
        return utility_values(model, X) - scenario.lam * np.asarray(scored_costs, dtype=float)

    if workspace is None:
        workspace = _grid_workspace(frontier, scenario, catalog, dim)
    grid_objective = (
        _grid_utilities(workspace, context, model) - scenario.lam * workspace.scored_costs
    )
    return _grid_target(frontier, evaluate, scenario, catalog, dim,
                        workspace=workspace, grid_objective=grid_objective)


@dataclass(frozen=True)
class Recommendation:
    context: str
    target_x: np.ndarray | None
    target_c: float | None
    target_utility: float | None
    target_objective: float | None
    selected_model: str | None
    selected_x: np.ndarray | None
    selected_cost: float | None
    achieved_utility: float | None
    deployment_value: float | None
    binding: tuple[str, ...] = field(default=())
    infeasible: bool = False
    tier: int | None = None


def _utility_of(utilities, scenario, context, X):
    if context == "aggregate":
        weights = resolved_weights(scenario, utilities.keys())
        per_group = np.stack([utility_values(utilities[g], X) for g in sorted(utilities)])
        if scenario.aggregation == "robust":
            return per_group.min(axis=0)
        w = np.array([weights[g] for g in sorted(utilities)])
        return w @ per_group
    return utility_values(utilities[context], X)


def recommend(
    catalog: Catalog,
    measures: MeasureSet,
    utilities: dict[str, UtilityModel],
    frontier: FrontierFit,
    scenario: Scenario,
    context: str,
    restrict_to_target_tier: bool = False,
    target: ContinuousTarget | None = None,
) -> Recommendation:
    """Continuous target followed by discrete selection over the feasible set.

    argmax picks the feasible model with the best scenario objective;
    nearest projects the target onto the closest feasible (x, c) profile.
    Ties break toward the cheaper model, then lexicographic id.
    """
    if target is None:
        target = continuous_target(frontier, utilities, scenario, context, catalog)
    ids, infeasible = feasible_set(catalog, measures, scenario)
    if infeasible:
        return Recommendation(
            context=context,
            target_x=target.x, target_c=target.cost,
            target_utility=target.utility, target_objective=target.objective,
            selected_model=None, selected_x=None, selected_cost=None,
            achieved_utility=None, deployment_value=None,
            binding=target.binding, infeasible=True,
        )
    tiers = frontier.tier_structure.tiers
    if restrict_to_target_tier:
        target_level = frontier.capability_index(target.x)
        target_tier = 1 + int(np.argmin(np.abs(frontier.tier_levels - target_level)))
        restricted = [m for m in ids if tiers.get(m) == target_tier]
        if restricted:
            ids = restricted
    X = np.array([measures.row(m) for m in ids])
    raw_costs = np.array([catalog.models[catalog.index_of(m)].cost for m in ids])
    scored_costs = cost_score(raw_costs, scenario, catalog)
    u_vals = _utility_of(utilities, scenario, context, X)
    if scenario.selection_strategy == "argmax":
        keys = u_vals - scenario.lam * scored_costs
        order = sorted(
            range(len(ids)), key=lambda i: (-keys[i], raw_costs[i], ids[i])
        )
    else:
        costs_all = catalog.costs()
        span = costs_all.max() - costs_all.min()
        span = span if span > 0 else 1.0
        target_c_norm = (target.cost - costs_all.min()) / span
        c_norm = (raw_costs - costs_all.min()) / span
        dist = np.sqrt(((X - target.x) ** 2).sum(axis=1) + (c_norm - target_c_norm) ** 2)
        order = sorted(range(len(ids)), key=lambda i: (dist[i], raw_costs[i], ids[i]))
    pick = order[0]
    achieved = float(u_vals[pick])
    return Recommendation(
        context=context,
        target_x=target.x, target_c=target.cost,
        target_utility=target.utility, target_objective=target.objective,
        selected_model=ids[pick],
        selected_x=X[pick],
        selected_cost=float(raw_costs[pick]),
        achieved_utility=achieved,
        deployment_value=achieved - scenario.lam * float(scored_costs[pick]),
        binding=target.binding,
        infeasible=False,
        tier=tiers.get(ids[pick]),
    )


@dataclass(frozen=True)
class LeaderboardEntry:
    model_id: str
    score: float
    utility_by_group: dict[str, float]
    cost_used: float
    feasible: bool
    rank: int | None = None


def leaderboard(
    catalog: Catalog,
    measures: MeasureSet,
    utilities: dict[str, UtilityModel],
    scenario: Scenario,
) -> list[LeaderboardEntry]:
    """Deployment-aware ranking: Score(m) = sum_z w_z U_z(x(m)) - lambda * cost."""
    if not catalog.models:
        raise PlannerError("empty catalog")
    weights = resolved_weights(scenario, utilities.keys())
    ids = list(catalog.model_ids)
    X = np.array([measures.row(m) for m in ids])
    raw_costs = catalog.costs()
    scored_costs = cost_score(raw_costs, scenario, catalog)
    per_group = {g: utility_values(utilities[g], X) for g in sorted(utilities)}
    weighted = sum(weights[g] * per_group[g] for g in per_group)
    scores = weighted - scenario.lam * scored_costs
    feasible_ids, _ = feasible_set(catalog, measures, scenario)
    feasible_mask = {m: m in set(feasible_ids) for m in ids}
    entries = []
    for i, m in enumerate(ids):
        entries.append(
            LeaderboardEntry(
                model_id=m,
                score=float(scores[i]),
                utility_by_group={g: float(per_group[g][i]) for g in per_group},
                cost_used=float(scored_costs[i]),
                feasible=feasible_mask[m],
            )
        )
    ranked = sorted(
        (e for e in entries if e.feasible),
        key=lambda e: (-e.score, catalog.models[catalog.index_of(e.model_id)].cost, e.model_id),
    )
    out = []
    for rank, e in enumerate(ranked, start=1):
        out.append(
            LeaderboardEntry(
                model_id=e.model_id, score=e.score, utility_by_group=e.utility_by_group,
                cost_used=e.cost_used, feasible=True, rank=rank,
            )
        )
    rest = sorted(
        (e for e in entries if not e.feasible),
        key=lambda e: (-e.score, catalog.models[catalog.index_of(e.model_id)].cost, e.model_id),
    )
    out.extend(rest)
    return out


def evaluate_policy(
    selections: dict[str, str],
    utilities: dict[str, UtilityModel],
    catalog: Catalog,
    measures: MeasureSet,
    scenario: Scenario,
) -> float:
    """Deployment value of per-group selections: each group's utility at its
    selected model, averaged with the scenario weights, minus lambda times the
    selected models' actual (scoring-convention) costs averaged the same way."""
    weights = resolved_weights(scenario, utilities.keys())
    missing = [g for g in utilities if g not in selections]
    if missing:
        raise PlannerError(f"missing selections for groups: {missing}")
    value = 0.0
    for g, w in weights.items():
        mid = selections[g]
        idx = catalog.index_of(mid)
        x = measures.row(mid)
        u = float(utility_values(utilities[g], x[None, :])[0])
        scored = float(cost_score(catalog.models[idx].cost, scenario, catalog))
        value += w * (u - scenario.lam * scored)
    return value
