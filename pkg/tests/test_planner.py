import numpy as np
import pytest

from deployselect.catalog import Catalog, ModelRecord, Scenario
from deployselect.planner import (
    PlannerError, aggregate_objective, continuous_target, evaluate_policy, feasible_set,
    leaderboard, recommend,
)
from deployselect.utility import UtilityModel

from conftest import PRISM_WEIGHTS, linear_weight_model


# --- feasible set -----------------------------------------------------------------

def test_feasible_no_constraints(prism_catalog, prism_measures):
    ids, infeasible = feasible_set(prism_catalog, prism_measures, Scenario())
    assert not infeasible
    assert set(ids) == set(prism_catalog.model_ids)


def test_feasible_floor_on_second_measure(prism_catalog, prism_measures):
    ids, _ = feasible_set(
        prism_catalog, prism_measures, Scenario(compliance_floors={1: 0.5})
    )
    assert "mistral-7b-instruct-v0.1" in ids  # sits exactly at the floor, >= passes
    assert "oasst-pythia-12b" not in ids
    assert "llama-2-7b-chat" not in ids


def test_feasible_overconstrained_empty(prism_catalog, prism_measures):
    ids, infeasible = feasible_set(
        prism_catalog, prism_measures,
        Scenario(compliance_floors={0: 0.99, 1: 0.99}, budget=0.01),
    )
    assert infeasible and ids == []


def test_feasible_unknown_floor_index(prism_catalog, prism_measures):
    with pytest.raises(PlannerError, match="unknown measure index"):
        feasible_set(prism_catalog, prism_measures, Scenario(compliance_floors={7: 0.5}))


# --- continuous targets -------------------------------------------------------------

def test_target_saturates_single_objective(prism_frontier, prism_utilities, prism_catalog):
    scenario = Scenario(lam=0.0, aggregation="per_type")
    target = continuous_target(prism_frontier, prism_utilities, scenario, "ethics", prism_catalog)
    # lambda = 0 with no budget: spend up to the level where the weighted dim saturates
    assert target.x[0] == pytest.approx(1.0, abs=1e-9)
    assert target.solver == "closed_form"


def test_target_prism_safety(prism_frontier, prism_utilities, prism_catalog):
    scenario = Scenario(lam=0.05, budget=37.5, aggregation="per_type")
    target = continuous_target(prism_frontier, prism_utilities, scenario, "safety", prism_catalog)
    assert target.x[0] == pytest.approx(0.07, abs=0.03)
    assert target.x[1] == pytest.approx(0.84, abs=0.3)
    assert target.cost == pytest.approx(3.39, abs=0.3)


def test_grid_matches_closed_form(prism_frontier, prism_utilities, prism_catalog):
    scenario = Scenario(lam=0.05, budget=37.5, aggregation="per_type")
    closed = continuous_target(prism_frontier, prism_utilities, scenario, "safety", prism_catalog)
    # same utility evaluated without the linear shortcut goes through the grid
    grid_model = UtilityModel(
        kind="linear_logistic",
        intercept=0.0,
        coefficients=prism_utilities["safety"].coefficients,
        normalized_weights=prism_utilities["safety"].normalized_weights,
        linear_index=True,
    )
    from deployselect import planner

    evaluate = lambda X, costs: X @ grid_model.normalized_weights - scenario.lam * np.asarray(costs)
    grid = planner._grid_target(prism_frontier, evaluate, scenario, prism_catalog, 2)
    assert grid.objective == pytest.approx(closed.objective, abs=0.01)


def test_target_routes_to_grid_outside_stylized_regime(prism_frontier, prism_utilities,
                                                       prism_catalog):
    import dataclasses

    # fitted returns-exponent above 1 falls outside the closed-form regime
    steep = dataclasses.replace(
        prism_frontier,
        d=1.3,
        tier_costs=(prism_frontier.tier_levels / prism_frontier.c0) ** (1 / 1.3),
    )
    scenario = Scenario(lam=0.05, budget=37.5, aggregation="per_type")
    target = continuous_target(steep, prism_utilities, scenario, "safety", prism_catalog)
    assert target.solver == "grid"
    flat = dataclasses.replace(
        prism_frontier,
        b=0.9,
        tier_costs=(prism_frontier.tier_levels / prism_frontier.c0) ** (1 / prism_frontier.d),
    )
    target = continuous_target(flat, prism_utilities, scenario, "safety", prism_catalog)
    assert target.solver == "grid"


def test_target_infeasible_floors(prism_frontier, prism_utilities, prism_catalog):
    scenario = Scenario(lam=0.05, budget=0.05, compliance_floors={0: 0.9, 1: 0.9})
    with pytest.raises(PlannerError):
        continuous_target(prism_frontier, prism_utilities, scenario, "safety", prism_catalog)


def test_target_unknown_context(prism_frontier, prism_utilities, prism_catalog):
    with pytest.raises(PlannerError, match="no utility model"):
        continuous_target(prism_frontier, prism_utilities, Scenario(), "nope", prism_catalog)


# --- aggregation ----------------------------------------------------------------------

def test_aggregate_single_group_equals_per_type():
    model = linear_weight_model((0.6, 0.4))
    x = np.array([[0.5, 0.5]])
    for mode in ("average", "robust"):
        evaluate = aggregate_objective({"g": model}, Scenario(lam=0.0, aggregation=mode))
        assert evaluate(x, [0.0])[0] == pytest.approx(0.5)


def test_aggregate_average_vs_robust():
    lo = linear_weight_model((1.0, 0.0))
    hi = linear_weight_model((0.0, 1.0))
    x = np.array([[0.2, 0.8]])
    avg = aggregate_objective({"lo": lo, "hi": hi}, Scenario(lam=0.0, aggregation="average"))
    rob = aggregate_objective({"lo": lo, "hi": hi}, Scenario(lam=0.0, aggregation="robust"))
    assert avg(x, [0.0])[0] == pytest.approx(0.5)
    assert rob(x, [0.0])[0] == pytest.approx(0.2)


def test_aggregate_mean_weights_score_mistral(prism_utilities, prism_measures):
    evaluate = aggregate_objective(prism_utilities, Scenario(lam=0.0, aggregation="average"))
    x = prism_measures.row("mistral-7b-instruct-v0.1")
    value = float(evaluate(x[None, :], [0.0])[0])
    mean_beta = np.mean([np.asarray(w) for w in PRISM_WEIGHTS.values()], axis=0)
    assert value == pytest.approx(float(mean_beta @ x), abs=1e-12)
    assert value == pytest.approx(0.53, abs=0.02)


def test_aggregate_needs_groups():
    with pytest.raises(PlannerError):
        aggregate_objective({}, Scenario())


# --- recommendations ----------------------------------------------------------------------

def rec_args(fixtures):
    return fixtures


def test_recommend_pure_capability_rows(prism_catalog, prism_measures, prism_utilities,
                                         prism_frontier):
    scenario = Scenario(lam=0.0, aggregation="per_type")
    rec = recommend(prism_catalog, prism_measures, prism_utilities, prism_frontier,
                    scenario, "safety")
    assert rec.selected_model == "gpt-4-1106-preview"
    assert rec.achieved_utility == pytest.approx(0.99, abs=0.01)
    rec = recommend(prism_catalog, prism_measures, prism_utilities, prism_frontier,
                    scenario, "ethics")
    assert rec.selected_model == "cohere-command"
    assert rec.achieved_utility == pytest.approx(1.0, abs=1e-9)


def test_recommend_cost_aware_high_score(prism_catalog, prism_measures, prism_utilities,
                                          prism_frontier):
    scenario = Scenario(lam=0.5, aggregation="per_type")
    x = prism_measures.row("gpt-4")
    u = float(prism_utilities["safety"].normalized_weights @ x)
    score = u - 0.5 * 37.5
    assert score == pytest.approx(-17.78, abs=0.05)
    rec = recommend(prism_catalog, prism_measures, prism_utilities, prism_frontier,
                    scenario, "safety")
    assert rec.selected_model != "gpt-4"


def test_recommend_single_feasible_model(prism_catalog, prism_measures, prism_utilities,
                                          prism_frontier):
    # budget admits exactly one model
    scenario = Scenario(lam=0.0, budget=0.12, aggregation="per_type")
    rec = recommend(prism_catalog, prism_measures, prism_utilities, prism_frontier,
                    scenario, "ethics")
    assert rec.selected_model == "llama-2-7b-chat"
    scenario = Scenario(lam=0.0, budget=0.01, aggregation="per_type")
    rec = recommend(prism_catalog, prism_measures, prism_utilities, prism_frontier,
                    scenario, "ethics")
    assert rec.infeasible and rec.selected_model is None


def test_recommend_feasibility_invariant(prism_catalog, prism_measures, prism_utilities,
                                          prism_frontier):
    scenario = Scenario(lam=0.05, budget=2.0, compliance_floors={1: 0.4},
                        aggregation="per_type")
    rec = recommend(prism_catalog, prism_measures, prism_utilities, prism_frontier,
                    scenario, "general")
    assert not rec.infeasible
    assert rec.selected_cost <= 2.0
    assert rec.selected_x[1] >= 0.4
    assert rec.deployment_value == pytest.approx(
        rec.achieved_utility - scenario.lam * rec.selected_cost
    )


def test_recommend_argmax_optimality(prism_catalog, prism_measures, prism_utilities,
                                      prism_frontier):
    scenario = Scenario(lam=0.2, aggregation="per_type")
    rec = recommend(prism_catalog, prism_measures, prism_utilities, prism_frontier,
                    scenario, "general")
    w = prism_utilities["general"].normalized_weights
    for m in prism_catalog.models:
        score = float(w @ prism_measures.row(m.model_id)) - scenario.lam * m.cost
    best = max(
        float(w @ prism_measures.row(m.model_id)) - scenario.lam * m.cost
        for m in prism_catalog.models
    )
    assert rec.deployment_value == pytest.approx(best, abs=1e-12)


def test_recommend_cost_monotone_in_lambda(prism_catalog, prism_measures, prism_utilities,
                                            prism_frontier):
    previous = np.inf
    for lam in (0.0, 0.01, 0.05, 0.2, 0.5, 1.0):
        rec = recommend(prism_catalog, prism_measures, prism_utilities, prism_frontier,
                        Scenario(lam=lam, aggregation="per_type"), "safety")
        assert rec.selected_cost <= previous + 1e-12
        previous = rec.selected_cost


def test_recommend_nearest_strategy(prism_catalog, prism_measures, prism_utilities,
                                     prism_frontier):
    scenario = Scenario(lam=0.05, budget=37.5, aggregation="per_type",
                        selection_strategy="nearest")
    rec = recommend(prism_catalog, prism_measures, prism_utilities, prism_frontier,
                    scenario, "safety")
    target = np.array(rec.target_x)
    costs = prism_catalog.costs()
    span = costs.max() - costs.min()
    t_norm = (rec.target_c - costs.min()) / span

    def distance(m):
        x = prism_measures.row(m.model_id)
        return np.sqrt(((x - target) ** 2).sum() + ((m.cost - costs.min()) / span - t_norm) ** 2)

    best = min(prism_catalog.models, key=lambda m: (distance(m), m.cost, m.model_id))
    assert rec.selected_model == best.model_id


def test_recommend_tie_breaks_to_cheaper_model(prism_frontier):
    models = (
        ModelRecord("pricey", {"C1": 0.8, "C2": 0.6}, {"price": 5.0}, 5.0),
        ModelRecord("bargain", {"C1": 0.8, "C2": 0.6}, {"price": 1.0}, 1.0),
        ModelRecord("weak", {"C1": 0.1, "C2": 0.1}, {"price": 0.5}, 0.5),
    )
    catalog = Catalog(models=models, capability_names=("C1", "C2"), cost_names=("price",))
    from deployselect.measures import measures_from_rows

    ms = measures_from_rows(
        [m.model_id for m in models],
        [[m.raw_capabilities["C1"], m.raw_capabilities["C2"]] for m in models],
    )
    utilities = {"g": linear_weight_model((0.5, 0.5))}
    rec = recommend(catalog, ms, utilities, prism_frontier,
                    Scenario(lam=0.0, aggregation="per_type"), "g")
    assert rec.selected_model == "bargain"


# --- leaderboards ----------------------------------------------------------------------------

def test_leaderboard_lambda_zero_orders_by_utility(prism_catalog, prism_measures,
                                                    prism_utilities):
    scenario = Scenario(lam=0.0, context_weights={"safety": 1.0}, aggregation="average")
    board = leaderboard(prism_catalog, prism_measures, prism_utilities, scenario)
    w = prism_utilities["safety"].normalized_weights
    utilities = {
        m.model_id: float(w @ prism_measures.row(m.model_id)) for m in prism_catalog.models
    }
    ranked = [e.model_id for e in board if e.rank is not None]
    expected = sorted(
        utilities,
        key=lambda m: (-utilities[m], prism_catalog.models[prism_catalog.index_of(m)].cost, m),
    )
    assert ranked == expected


def test_leaderboard_fixture_scores(prism_catalog, prism_measures, prism_utilities):
    scenario = Scenario(lam=0.05, aggregation="average")
    board = leaderboard(prism_catalog, prism_measures, prism_utilities, scenario)
    by_id = {e.model_id: e for e in board}
    assert by_id["cohere-command"].rank < by_id["gpt-4"].rank
    assert by_id["gpt-4"].score == pytest.approx(-1.09, abs=0.01)
    assert by_id["cohere-command"].score == pytest.approx(0.73, abs=0.01)


def test_leaderboard_rescaling_invariance(prism_catalog, prism_measures, prism_utilities):
    s = 7.5
    base = leaderboard(prism_catalog, prism_measures, prism_utilities,
                       Scenario(lam=0.3, aggregation="average"))
    scaled_models = tuple(
        ModelRecord(m.model_id, m.raw_capabilities, {"price": m.cost * s}, m.cost * s)
        for m in prism_catalog.models
    )
    scaled_catalog = Catalog(models=scaled_models, capability_names=("C1", "C2"),
                             cost_names=("price",))
    scaled = leaderboard(scaled_catalog, prism_measures, prism_utilities,
                         Scenario(lam=0.3 / s, aggregation="average"))
    assert [e.model_id for e in base] == [e.model_id for e in scaled]
    for e1, e2 in zip(base, scaled):
        assert e1.score == pytest.approx(e2.score, abs=1e-12)
        assert e1.rank == e2.rank


def test_leaderboard_permutation_invariance(prism_catalog, prism_measures, prism_utilities):
    rng = np.random.default_rng(41)
    perm = rng.permutation(len(prism_catalog.models))
    permuted = Catalog(
        models=tuple(prism_catalog.models[i] for i in perm),
        capability_names=prism_catalog.capability_names,
        cost_names=prism_catalog.cost_names,
    )
    from deployselect.measures import measures_from_rows

    ms = measures_from_rows(permuted.model_ids, [prism_measures.row(m) for m in permuted.model_ids])
    scenario = Scenario(lam=0.05, aggregation="average")
    base = leaderboard(prism_catalog, prism_measures, prism_utilities, scenario)
    shuffled = leaderboard(permuted, ms, prism_utilities, scenario)
    assert [(e.model_id, e.rank) for e in base] == [(e.model_id, e.rank) for e in shuffled]
    for e1, e2 in zip(base, shuffled):
        assert e1.score == pytest.approx(e2.score, abs=1e-12)


def test_leaderboard_infeasible_unranked(prism_catalog, prism_measures, prism_utilities):
    scenario = Scenario(lam=0.0, budget=2.0, aggregation="average")
    board = leaderboard(prism_catalog, prism_measures, prism_utilities, scenario)
    for e in board:
        if e.feasible:
            assert e.rank is not None
        else:
            assert e.rank is None
    assert {e.model_id for e in board} == set(prism_catalog.model_ids)


def test_robust_lower_bounds_average(prism_catalog, prism_measures, prism_utilities):
    rng = np.random.default_rng(42)
    avg = aggregate_objective(prism_utilities, Scenario(lam=0.1, aggregation="average"))
    rob = aggregate_objective(prism_utilities, Scenario(lam=0.1, aggregation="robust"))
    X = rng.uniform(0, 1, (50, 2))
    costs = rng.uniform(0, 5, 50)
    assert np.all(rob(X, costs) <= avg(X, costs) + 1e-12)


# --- deployment value ---------------------------------------------------------------------------

def test_evaluate_policy_pure_capability(prism_catalog, prism_measures, prism_utilities,
                                          prism_frontier):
    scenario = Scenario(lam=0.0, aggregation="per_type")
    selections = {
        g: recommend(prism_catalog, prism_measures, prism_utilities, prism_frontier,
                     scenario, g).selected_model
        for g in prism_utilities
    }
    value = evaluate_policy(selections, prism_utilities, prism_catalog, prism_measures, scenario)
    assert value == pytest.approx(0.941, abs=0.01)


def test_evaluate_policy_weight_independent_when_identical(prism_catalog, prism_measures):
    same = {g: linear_weight_model((0.5, 0.5)) for g in ("g1", "g2")}
    selections = {"g1": "cohere-command", "g2": "cohere-command"}
    v1 = evaluate_policy(selections, same, prism_catalog, prism_measures,
                         Scenario(lam=0.1, context_weights={"g1": 0.9, "g2": 0.1},
                                  aggregation="average"))
    v2 = evaluate_policy(selections, same, prism_catalog, prism_measures,
                         Scenario(lam=0.1, aggregation="average"))
    assert v1 == pytest.approx(v2, abs=1e-12)


def test_evaluate_policy_lambda_zero_is_mean_utility(prism_catalog, prism_measures,
                                                      prism_utilities):
    selections = {g: "claude-instant-1" for g in prism_utilities}
    value = evaluate_policy(selections, prism_utilities, prism_catalog, prism_measures,
                            Scenario(lam=0.0, aggregation="average"))
    x = prism_measures.row("claude-instant-1")
    expected = np.mean([
        float(u.normalized_weights @ x) for u in prism_utilities.values()
    ])
    assert value == pytest.approx(expected, abs=1e-12)


def test_evaluate_policy_missing_selection(prism_catalog, prism_measures, prism_utilities):
    with pytest.raises(PlannerError):
        evaluate_policy({"safety": "gpt-4"}, prism_utilities, prism_catalog, prism_measures,
                        Scenario())
