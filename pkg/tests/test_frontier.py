import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deployselect.frontier import (
    FrontierConfig, FrontierError, TierStructure, ces_score, ces_score_many, dominates,
    estimate_frontier, fit_capability_frontier, fit_cost_frontier, pareto_layers, pava,
    peel_and_tier,
)
from deployselect.measures import measures_from_rows

from test_measures import catalog_from_matrix


# --- dominance and peeling ---------------------------------------------------

def test_dominates_examples():
    assert dominates([1, 1], [0, 0])
    assert not dominates([0.5, 0.5], [0.5, 0.5])
    assert dominates([0.66, 1.00], [0.62, 0.97])
    assert not dominates([0.62, 0.97], [0.66, 1.00])
    with pytest.raises(FrontierError):
        dominates([1, 2], [1, 2, 3])


def test_dominates_tolerance():
    # within tolerance everywhere and no strict win beyond it: mutually nondominated
    assert not dominates([0.5, 0.505], [0.5, 0.5], tolerance=0.01)
    assert dominates([0.5, 0.52], [0.5, 0.5], tolerance=0.01)


def brute_force_layers(ids, rows, tolerance=0.0):
    remaining = dict(zip(ids, rows))
    layers = []
    while remaining:
        front = sorted(
            m
            for m in remaining
            if not any(
                dominates(remaining[o], remaining[m], tolerance)
                for o in remaining
                if o != m
            )
        )
        layers.append(front)
        for m in front:
            del remaining[m]
    return layers


def test_peel_single_layer():
    rows = [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]
    ms = measures_from_rows(["a", "b", "c"], rows)
    tiers = peel_and_tier(ms, 1, 0.0)
    assert tiers.tier_count == 1
    assert tiers.efficient[1] == ("a", "b", "c")


def test_peel_chain_1d():
    ms = measures_from_rows(["lo", "mid", "hi"], [[0.1], [0.2], [0.3]])
    tiers = peel_and_tier(ms, 3, 0.0)
    assert tiers.tiers == {"lo": 1, "mid": 2, "hi": 3}
    assert tiers.layers == (("hi",), ("mid",), ("lo",))


def test_peel_matches_brute_force_oracle():
    rng = np.random.default_rng(11)
    rows = rng.uniform(0, 1, (30, 2))
    ids = [f"m{i:02d}" for i in range(30)]
    layers = pareto_layers(ids, rows, 0.0)
    assert layers == brute_force_layers(ids, rows)
    coords = dict(zip(ids, rows))
    for upper, lower in zip(layers, layers[1:]):
        for m in lower:
            assert any(dominates(coords[o], coords[m]) for o in upper)
        for m, o in itertools.combinations(lower, 2):
            assert not dominates(coords[m], coords[o])
            assert not dominates(coords[o], coords[m])


def test_peel_layer_count_guard():
    ms = measures_from_rows(["a", "b"], [[0.1], [0.9]])
    with pytest.raises(FrontierError):
        peel_and_tier(ms, 3, 0.0)


def test_merge_balances_tier_sizes():
    # layers of size 4 + four singleton layers -> 2 tiers of 4
    rows = [[0.9, 0.1], [0.8, 0.3], [0.5, 0.6], [0.1, 0.95]]
    rows += [[v, v] for v in (0.4, 0.3, 0.2, 0.1)]
    ids = [f"m{i}" for i in range(8)]
    tiers = peel_and_tier(measures_from_rows(ids, rows), 2, 0.0)
    sizes = {t: len(tiers.members(t)) for t in (1, 2)}
    assert sizes == {1: 4, 2: 4}


# --- CES score ----------------------------------------------------------------

def test_ces_constant_input():
    for b in (0.5, 1.0, 2.0, 4.0):
        assert ces_score([0.3, 0.3, 0.3], [0.2, 0.5, 0.3], b) == pytest.approx(0.3)


def test_ces_linear_limit():
    a = np.array([0.25, 0.75])
    x = np.array([0.4, 0.8])
    assert ces_score(x, a, 1.0) == pytest.approx(float(a @ x))


def test_ces_fixture_value():
    assert ces_score([0.07, 0.84], [0.53, 0.47], 2.67) == pytest.approx(0.633, abs=0.002)
    # consistent with the fitted cost map at the matching spend level
    assert 0.49 * 3.39**0.21 == pytest.approx(0.633, abs=0.002)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0.01, 1.0), min_size=2, max_size=4),
    st.floats(0.3, 5.0),
    st.floats(0.1, 5.0),
)
def test_ces_positive_homogeneity(x, b, t):
    x = np.array(x)
    a = np.full(x.size, 1.0 / x.size)
    lhs = ces_score(t * x, a, b)
    rhs = t * ces_score(x, a, b)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=4), st.floats(0.3, 5.0))
def test_ces_coordinate_monotone(x, b):
    x = np.array(x)
    a = np.full(x.size, 1.0 / x.size)
    bumped = x.copy()
    bumped[0] = min(1.0, bumped[0] + 0.1)
    assert ces_score(bumped, a, b) >= ces_score(x, a, b) - 1e-12


def test_ces_zero_is_zero():
    assert ces_score([0.0, 0.0], [0.5, 0.5], 2.0) == 0.0


def test_ces_rejects_invalid_inputs():
    with pytest.raises(FrontierError):
        ces_score([0.5, 0.5], [0.7, 0.7], 2.0)  # weights off the simplex
    with pytest.raises(FrontierError):
        ces_score([0.5, 0.5], [0.5, 0.5], 0.0)
    with pytest.raises(FrontierError):
        ces_score([-0.5, 0.5], [0.5, 0.5], 2.0)


def test_pava_rejects_bad_inputs():
    with pytest.raises(FrontierError):
        pava([])
    with pytest.raises(FrontierError):
        pava([1.0, 2.0], [1.0])
    with pytest.raises(FrontierError):
        pava([1.0, 2.0], [1.0, 0.0])


# --- isotonic regression -------------------------------------------------------

def exhaustive_isotonic(values, weights):
    """Best nondecreasing fit by enumerating all contiguous block partitions."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = values.size
    best, best_sse = None, np.inf
    for cuts in itertools.product([0, 1], repeat=n - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        means = []
        for lo, hi in zip(bounds, bounds[1:]):
            means.append(float(weights[lo:hi] @ values[lo:hi] / weights[lo:hi].sum()))
        if any(m2 < m1 for m1, m2 in zip(means, means[1:])):
            continue
        fit = np.concatenate(
            [np.full(hi - lo, m) for (lo, hi), m in zip(zip(bounds, bounds[1:]), means)]
        )
        sse = float(weights @ (values - fit) ** 2)
        if sse < best_sse - 1e-15:
            best, best_sse = fit, sse
    return best


def test_pava_examples():
    np.testing.assert_allclose(pava([1, 2, 3]), [1, 2, 3])
    np.testing.assert_allclose(pava([3, 1, 2]), [2, 2, 2])


def test_pava_matches_exhaustive_oracle():
    rng = np.random.default_rng(12)
    for _ in range(25):
        n = int(rng.integers(2, 9))
        values = rng.normal(size=n)
        weights = rng.uniform(0.2, 3.0, n)
        np.testing.assert_allclose(
            pava(values, weights), exhaustive_isotonic(values, weights), atol=1e-9
        )


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=10))
def test_pava_monotone_and_mean_preserving(values):
    values = np.array(values)
    out = pava(values)
    assert np.all(np.diff(out) >= -1e-12)
    assert out.mean() == pytest.approx(values.mean(), abs=1e-12)


# --- capability fit -------------------------------------------------------------

def synthetic_tiers(a, b, levels, n_per, rng, noise=0.0):
    ids, rows, tiers, efficient = [], [], {}, {}
    for t, lam in enumerate(levels, start=1):
        pts = []
        while len(pts) < n_per:
            u = rng.uniform(0.15, 1.0, len(a))
            s = float(np.sum(np.asarray(a) * u ** b) ** (1.0 / b))
            x = lam * u / s
            if np.all(x <= 1.0):
                pts.append(np.clip(x + rng.normal(0, noise, len(a)), 1e-3, 1.0))
        names = [f"t{t}m{j:02d}" for j in range(n_per)]
        ids += names
        rows += pts
        tiers.update({m: t for m in names})
        efficient[t] = tuple(sorted(names))
    return (
        measures_from_rows(ids, rows),
        TierStructure(layers=(), tiers=tiers, efficient=efficient, tolerance=0.0),
    )


def test_capability_fit_recovers_noiseless():
    rng = np.random.default_rng(42)
    a, b, levels = np.array([0.6, 0.4]), 2.0, np.array([0.4, 0.6, 0.8])
    ms, ts = synthetic_tiers(a, b, levels, 14, rng)
    fit = fit_capability_frontier(ms, ts)
    assert np.abs(fit.a - a).max() <= 0.02
    assert abs(fit.b - b) <= 0.1
    assert np.abs(fit.tier_levels - levels).max() <= 0.01
    assert all(l2 <= l1 + 1e-12 for l1, l2 in zip(fit.loss_history, fit.loss_history[1:]))


def test_capability_fit_degenerate_identical_points():
    rows = [[0.5, 0.5]] * 4
    ids = [f"m{i}" for i in range(4)]
    ms = measures_from_rows(ids, rows)
    ts = TierStructure(
        layers=(), tiers={m: 1 for m in ids}, efficient={1: tuple(ids)}, tolerance=0.0
    )
    fit = fit_capability_frontier(ms, ts)
    assert fit.fit_loss <= 1e-18
    assert fit.degenerate
    assert np.ptp(fit.tier_levels) == 0.0


# --- cost fit --------------------------------------------------------------------

def test_cost_fit_two_point_example():
    fit = fit_cost_frontier([0.5, 1.0], [[1.0], [4.0]], "median")
    assert fit.d == pytest.approx(0.5)
    assert fit.c0 == pytest.approx(0.5)
    np.testing.assert_allclose(fit.tier_costs, [1.0, 4.0])


def test_cost_fit_exact_power_law():
    k, d = 0.7, 0.4
    costs = np.array([0.5, 1.2, 3.0, 8.0])
    levels = k * costs**d
    fit = fit_cost_frontier(levels, [[c] for c in costs], "mean")
    assert fit.d == pytest.approx(d, abs=1e-9)
    assert fit.c0 == pytest.approx(k, abs=1e-9)
    np.testing.assert_allclose(fit.c0 * fit.tier_costs**fit.d, levels, atol=1e-9)


def test_cost_fit_single_tier_flag():
    fit = fit_cost_frontier([0.5], [[1.0, 2.0]], "median")
    assert fit.d == 1.0
    assert fit.slope_degenerate


def test_cost_fit_rejects_nonpositive_cost():
    with pytest.raises(FrontierError):
        fit_cost_frontier([0.5, 1.0], [[1.0], [0.0]], "median")


# --- end-to-end estimation --------------------------------------------------------

def test_estimate_frontier_1d_reduction():
    rng = np.random.default_rng(13)
    values = np.sort(rng.uniform(0.1, 1.0, 9))
    raw = values[:, None]
    catalog = catalog_from_matrix(raw)
    ms = measures_from_rows(catalog.model_ids, raw)
    fit = estimate_frontier(ms, catalog, FrontierConfig(target_tiers=3))
    for t in (1, 2, 3):
        members = fit.tier_structure.members(t)
        top = max(values[int(m[1:])] for m in members)
        assert fit.tier_levels[t - 1] == pytest.approx(top, abs=1e-9)
    env = fit.c0 * fit.tier_costs**fit.d
    assert np.all(env >= fit.tier_levels - 1e-9)
    assert np.isclose(env, fit.tier_levels).any()


def test_estimate_frontier_permutation_invariance():
    rng = np.random.default_rng(14)
    raw = rng.uniform(0, 1, (24, 2))
    catalog = catalog_from_matrix(raw)
    ms = measures_from_rows(catalog.model_ids, raw)
    fit = estimate_frontier(ms, catalog, FrontierConfig(target_tiers=3))

    perm = rng.permutation(24)
    catalog2 = catalog_from_matrix(raw)  # same payload, permuted row order
    models = tuple(catalog2.models[i] for i in perm)
    from deployselect.catalog import Catalog

    catalog2 = Catalog(models=models, capability_names=catalog.capability_names,
                       cost_names=catalog.cost_names)
    ms2 = measures_from_rows(catalog2.model_ids, raw[perm])
    fit2 = estimate_frontier(ms2, catalog2, FrontierConfig(target_tiers=3))
    np.testing.assert_allclose(fit2.a, fit.a, atol=1e-9)
    assert fit2.b == pytest.approx(fit.b, abs=1e-9)
    np.testing.assert_allclose(fit2.tier_levels, fit.tier_levels, atol=1e-9)
    np.testing.assert_allclose(fit2.tier_costs, fit.tier_costs, atol=1e-9)
    assert fit2.tier_structure.tiers == fit.tier_structure.tiers


def test_estimate_frontier_near_linear_three_factor():
    rng = np.random.default_rng(15)
    a, b, levels = np.array([0.3, 0.4, 0.3]), 1.0, np.array([0.3, 0.5, 0.7])
    ms, ts = synthetic_tiers(a, b + 1e-9, levels, 12, rng, noise=0.01)
    fit = fit_capability_frontier(ms, ts)
    assert abs(fit.b - 1.0) <= 0.2


def test_estimate_frontier_envelope_invariant_random():
    rng = np.random.default_rng(16)
    for trial in range(3):
        raw = rng.uniform(0, 1, (18, 2))
        catalog = catalog_from_matrix(raw)
        ms = measures_from_rows(catalog.model_ids, raw)
        fit = estimate_frontier(ms, catalog, FrontierConfig(target_tiers=2))
        assert np.all(fit.c0 * fit.tier_costs**fit.d >= fit.tier_levels - 1e-9)
        assert np.all(np.diff(fit.tier_levels) >= -1e-12)
        assert np.all(np.diff(fit.tier_costs) >= -1e-12)
