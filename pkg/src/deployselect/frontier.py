"""Empirical capability-cost frontier estimation.

Pareto peeling orders models into layers, adjacent layers merge into tiers,
a tiered CES aggregator is fitted to the per-tier efficient sets by
alternating minimization under a robust soft-l1 loss, and a power-law cost
map is fitted tier-by-tier with an upper-envelope intercept.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import Catalog
from .measures import MeasureSet
from .numerics import golden_section, project_to_simplex, soft_l1, soft_l1_grad


class FrontierError(ValueError):
    pass


def dominates(x, y, tolerance: float = 0.0) -> bool:
    """Pareto dominance: x >= y - tol componentwise with a strict win somewhere."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise FrontierError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return bool(np.all(x >= y - tolerance) and np.any(x > y + tolerance))


def _nondominated_ids(ids, rows, tolerance):
    X = np.asarray(rows, dtype=float)
    weak = np.all(X[:, None, :] >= X[None, :, :] - tolerance, axis=2)
    strict = np.any(X[:, None, :] > X[None, :, :] + tolerance, axis=2)
    dom = weak & strict  # dom[i, j]: row i dominates row j
    np.fill_diagonal(dom, False)
    keep_mask = ~dom.any(axis=0)
    return [mid for mid, keep in zip(ids, keep_mask) if keep]


def pareto_layers(ids, rows, tolerance: float = 0.0) -> list[list[str]]:
    """Iterated non-dominated-set removal; first layer is the strongest."""
    ids = list(ids)
    rows = {m: np.asarray(r, dtype=float) for m, r in zip(ids, rows)}
    remaining = sorted(ids)
    layers = []
    while remaining:
        front = _nondominated_ids(remaining, [rows[m] for m in remaining], tolerance)
        front = sorted(front)
        layers.append(front)
        remaining = [m for m in remaining if m not in set(front)]
    return layers


@dataclass(frozen=True)
class TierStructure:
    layers: tuple[tuple[str, ...], ...]  # peel order, strongest first
    tiers: dict[str, int]  # model_id -> tier in 1..T, weakest -> strongest
    efficient: dict[int, tuple[str, ...]]  # tier -> within-tier Pareto-efficient ids
    tolerance: float

    @property
    def tier_count(self) -> int:
        return max(self.tiers.values())

    def members(self, tier: int) -> list[str]:
        return sorted(m for m, t in self.tiers.items() if t == tier)


def _merge_adjacent(layer_sizes: list[int], target_tiers: int) -> list[list[int]]:
    """Greedy contiguous grouping of peel layers toward equal tier sizes."""
    n_layers = len(layer_sizes)
    target = sum(layer_sizes) / target_tiers
    groups = []
    i = 0
    for g in range(target_tiers):
        remaining_groups = target_tiers - g
        if g == target_tiers - 1:
            take = n_layers - i
        else:
            max_take = (n_layers - i) - (remaining_groups - 1)
            take = 1
            size = layer_sizes[i]
            while take < max_take and abs(size + layer_sizes[i + take] - target) <= abs(
                size - target
            ):
                size += layer_sizes[i + take]
                take += 1
        groups.append(list(range(i, i + take)))
        i += take
    return groups


def peel_and_tier(measures: MeasureSet, target_tiers: int, tolerance: float = 0.0) -> TierStructure:
    if target_tiers < 1:
        raise FrontierError("target_tiers must be >= 1")
    ids = measures.model_ids
    if not ids:
        raise FrontierError("empty catalog")
    layers = pareto_layers(ids, measures.measures, tolerance)
    if target_tiers > len(layers):
        raise FrontierError(
            f"target_tiers {target_tiers} exceeds peel layer count {len(layers)}"
        )
    groups = _merge_adjacent([len(layer) for layer in layers], target_tiers)
    tiers: dict[str, int] = {}
    efficient: dict[int, tuple[str, ...]] = {}
    for gi, layer_ixs in enumerate(groups):
        tier = target_tiers - gi  # first group holds the strongest layers
        members = sorted(m for li in layer_ixs for m in layers[li])
        for m in members:
            tiers[m] = tier
        rows = [measures.row(m) for m in members]
        efficient[tier] = tuple(_nondominated_ids(members, rows, tolerance))
    return TierStructure(
        layers=tuple(tuple(layer) for layer in layers),
        tiers=tiers,
        efficient=efficient,
        tolerance=tolerance,
    )


def ces_score(x, a, b: float) -> float:
    """CES capability index (sum_i a_i x_i^b)^(1/b); returns 0 at x = 0."""
    return float(ces_score_many(np.asarray(x, dtype=float)[None, :], a, b)[0])


def ces_score_many(X, a, b: float) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    a = np.asarray(a, dtype=float)
    if b <= 0:
        raise FrontierError("CES curvature b must be positive")
    if abs(a.sum() - 1.0) > 1e-6 or np.any(a < 0):
        raise FrontierError("CES weights must be nonnegative and sum to 1")
    if np.any(X < -1e-12):
        raise FrontierError("CES inputs must be nonnegative")
    W = np.clip(X, 0.0, None) ** b @ a
    return W ** (1.0 / b)


def pava(values, weights=None) -> np.ndarray:
    """Weighted least-squares isotonic (nondecreasing) fit by pool-adjacent-violators."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise FrontierError("pava needs a nonempty sequence")
    if weights is None:
        weights = np.ones_like(values)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != values.shape:
        raise FrontierError("pava weights must match values in length")
    if np.any(weights <= 0):
        raise FrontierError("pava weights must be positive")
    means: list[float] = []
    wsum: list[float] = []
    count: list[int] = []
    for v, w in zip(values, weights):
        means.append(float(v))
        wsum.append(float(w))
        count.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, c2 = means.pop(), wsum.pop(), count.pop()
            m1, w1, c1 = means.pop(), wsum.pop(), count.pop()
            means.append((m1 * w1 + m2 * w2) / (w1 + w2))
            wsum.append(w1 + w2)
            count.append(c1 + c2)
    out = np.empty_like(values)
    i = 0
    for m, c in zip(means, count):
        out[i : i + c] = m
        i += c
    return out


@dataclass(frozen=True)
class FrontierConfig:
    target_tiers: int = 3
    tolerance: float = 0.0
    aggregation: str = "median"  # tier-cost aggregate: mean | geomean | median
    loss_scale: float = 1.0
    b_bounds: tuple[float, float] = (0.2, 10.0)
    max_iter: int = 100
    convergence_tol: float = 1e-9


@dataclass(frozen=True)
class CapabilityFit:
    a: np.ndarray
    b: float
    tier_levels: np.ndarray
    fit_loss: float
    converged: bool
    degenerate: bool = False
    loss_history: tuple[float, ...] = ()


def _robust_center(scores: np.ndarray, scale: float) -> float:
    lo, hi = float(scores.min()), float(scores.max())
    if hi - lo < 1e-15:
        return lo
    return golden_section(lambda v: soft_l1((scores - v) / scale).sum(), lo, hi, tol=1e-12)


def fit_capability_frontier(
    measures: MeasureSet, tiers: TierStructure, config: FrontierConfig = FrontierConfig()
) -> CapabilityFit:
    """Alternating minimization of the robust tier-level CES fit:
    (i) tier levels by robust centers + isotonic adjustment, (ii) weights by
    projected gradient on the simplex, (iii) curvature by bounded 1-D search.
    """
    T = tiers.tier_count
    eff_ids = []
    eff_tier = []
    for t in range(1, T + 1):
        if not tiers.efficient.get(t):
            raise FrontierError(f"tier {t} has no efficient models")
        for m in tiers.efficient[t]:
            eff_ids.append(m)
            eff_tier.append(t)
    order = np.argsort(np.array(eff_ids))
    X = np.array([measures.row(eff_ids[i]) for i in order])
    tier_ix = np.array(eff_tier)[order] - 1
    tier_weights = np.array([np.sum(tier_ix == t) for t in range(T)], dtype=float)
    scale = config.loss_scale

    def loss(a, b, lam):
        s = ces_score_many(X, a, b)
        return float(soft_l1((s - lam[tier_ix]) / scale).sum())

    def lambda_step(a, b, lam_old):
        s = ces_score_many(X, a, b)
        targets = np.array([_robust_center(s[tier_ix == t], scale) for t in range(T)])
        lam_new = pava(targets, tier_weights)
        return lam_new if loss(a, b, lam_new) <= loss(a, b, lam_old) else lam_old

    def a_step(a, b, lam, inner=60):
        current = loss(a, b, lam)
        for _ in range(inner):
            s = ces_score_many(X, a, b)
            W = np.clip(X, 0.0, None) ** b @ a
            resid = (s - lam[tier_ix]) / scale
            # d s / d a_i = W^(1/b - 1) x_i^b / b
            with np.errstate(divide="ignore", invalid="ignore"):
                front = np.where(W > 0, W ** (1.0 / b - 1.0), 0.0)
            grad = ((soft_l1_grad(resid) / scale) * front / b) @ (np.clip(X, 0.0, None) ** b)
            step = 0.5 / (np.linalg.norm(grad) + 1e-12)
            improved = False
            for _ in range(40):
                cand = project_to_simplex(a - step * grad, floor=1e-9)
                new = loss(cand, b, lam)
                if new < current - 1e-15:
                    a, current, improved = cand, new, True
                    break
                step *= 0.5
            if not improved:
                break
        return a

    def b_step(a, b, lam):
        cand = golden_section(
            lambda bb: loss(a, bb, lam), config.b_bounds[0], config.b_bounds[1], tol=1e-9
        )
        return cand if loss(a, cand, lam) < loss(a, b, lam) else b

    I = X.shape[1]
    a = np.full(I, 1.0 / I)
    b = 1.5
    lam = pava(
        np.array([ces_score_many(X[tier_ix == t], a, b).mean() for t in range(T)]),
        tier_weights,
    )
    prev = loss(a, b, lam)
    history = [prev]
    converged = False
    for _ in range(config.max_iter):
        lam = lambda_step(a, b, lam)
        a = a_step(a, b, lam)
        b = b_step(a, b, lam)
        current = loss(a, b, lam)
        history.append(current)
        if current > prev + 1e-12:
            raise FrontierError("alternating fit loss increased")  # guarded steps forbid this
        if prev - current <= config.convergence_tol * max(1.0, prev):
            converged = True
            break
        prev = current
    final = loss(a, b, lam)
    degenerate = final <= 1e-20 and float(X.std()) <= 1e-15
    return CapabilityFit(
        a=a, b=float(b), tier_levels=lam, fit_loss=final, converged=converged,
        degenerate=degenerate, loss_history=tuple(history),
    )


@dataclass(frozen=True)
class CostFit:
    c0: float
    d: float
    tier_costs: np.ndarray
    slope_degenerate: bool = False


def aggregate_costs(samples, aggregation: str) -> float:
    arr = np.asarray(samples, dtype=float)
    if aggregation == "mean":
        return float(arr.mean())
    if aggregation == "geomean":
        return float(np.exp(np.log(arr).mean()))
    if aggregation == "median":
        return float(np.median(arr))
    raise FrontierError(f"unknown cost aggregation {aggregation!r}")


def fit_cost_frontier(tier_levels, tier_costs_raw, aggregation: str = "median") -> CostFit:
    """Representative tier costs -> isotonic adjust -> log-log OLS slope ->
    upper-envelope intercept c0 = max_t lambda_t / c_t^d."""
    lam = np.asarray(tier_levels, dtype=float)
    if len(tier_costs_raw) != lam.size:
        raise FrontierError("one cost sample set per tier required")
    for t, samples in enumerate(tier_costs_raw):
        if len(samples) == 0:
            raise FrontierError(f"tier {t + 1} has no cost samples")
        if np.any(np.asarray(samples, dtype=float) <= 0):
            raise FrontierError(f"tier {t + 1} has a nonpositive cost")
    reps = np.array([aggregate_costs(s, aggregation) for s in tier_costs_raw])
    weights = np.array([len(s) for s in tier_costs_raw], dtype=float)
    costs = pava(reps, weights)
    degenerate = False
    if lam.size < 2 or np.ptp(np.log(costs)) < 1e-12:
        d = 1.0
        degenerate = True
    else:
        lx = np.log(costs)
        ly = np.log(np.maximum(lam, 1e-300))
        lxc = lx - lx.mean()
        d = float((lxc @ (ly - ly.mean())) / (lxc @ lxc))
        if d <= 0:
            d = 1e-6
            degenerate = True
    c0 = float(np.max(lam / costs**d))
    return CostFit(c0=c0, d=d, tier_costs=costs, slope_degenerate=degenerate)


@dataclass(frozen=True)
class FrontierFit:
    a: np.ndarray
    b: float
    tier_levels: np.ndarray
    c0: float
    d: float
    tier_costs: np.ndarray
    fit_loss: float
    tier_structure: TierStructure
    converged: bool = True
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if abs(float(np.sum(self.a)) - 1.0) > 1e-9:
            raise FrontierError("CES weights must sum to 1 within 1e-9")
        if np.any(np.diff(self.tier_levels) < -1e-12):
            raise FrontierError("tier levels must be nondecreasing")
        if np.any(np.diff(self.tier_costs) < -1e-12):
            raise FrontierError("tier costs must be nondecreasing")
        env = self.c0 * self.tier_costs**self.d
        if np.any(env < self.tier_levels - 1e-9):
            raise FrontierError("cost frontier must upper-envelope the tier levels")

    def capability_index(self, x) -> float:
        return ces_score(x, self.a, self.b)

    def attainable_level(self, cost: float) -> float:
        return self.c0 * cost**self.d

    def min_cost_for(self, x) -> float:
        """Smallest cost whose frontier level covers the profile x."""
        level = self.capability_index(x)
        if level <= 0.0:
            return 0.0
        return float((level / self.c0) ** (1.0 / self.d))


def estimate_frontier(
    measures: MeasureSet, catalog: Catalog, config: FrontierConfig = FrontierConfig()
) -> FrontierFit:
    tiers = peel_and_tier(measures, config.target_tiers, config.tolerance)
    cap = fit_capability_frontier(measures, tiers, config)
    cost_by_id = {m.model_id: m.cost for m in catalog.models}
    samples = [
        [cost_by_id[m] for m in tiers.members(t)] for t in range(1, tiers.tier_count + 1)
    ]
    cost = fit_cost_frontier(cap.tier_levels, samples, config.aggregation)
    flags = []
    if not cap.converged:
        flags.append("capability_fit_not_converged")
    if cap.degenerate:
        flags.append("capability_fit_degenerate")
    if cost.slope_degenerate:
        flags.append("cost_slope_degenerate")
    if cap.b <= 1.0:
        flags.append("curvature_outside_stylized_regime")
    return FrontierFit(
        a=cap.a,
        b=cap.b,
        tier_levels=np.maximum(cap.tier_levels, 1e-12),
        c0=cost.c0,
        d=cost.d,
        tier_costs=cost.tier_costs,
        fit_loss=cap.fit_loss,
        tier_structure=tiers,
        converged=cap.converged,
        flags=tuple(flags),
    )
