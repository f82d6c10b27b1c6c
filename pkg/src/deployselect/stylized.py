"""Closed-form solver for the linear-utility selection problem and its
comparative statics.

The program: maximize beta.x - lambda*c subject to R <= x <= 1, 0 <= c <= B
and the CES/power frontier (sum_i a_i x_i^b)^(1/b) <= c0 c^d, with b > 1 and
0 < d <= 1. At the optimum the frontier binds and each dimension sits at its
floor, its ceiling, or the interior stationary value driven by a single
frontier multiplier mu0.

Solution method: the value of the program as a function of cost alone is
concave, so its derivative r(c) = mu0(c) * c0^b * b * d * c^(bd-1) - lambda
is nonincreasing; an outer bisection on c locates r = 0 (or detects a binding
budget), and an inner bisection recovers mu0(c) from the frontier equality
sum_i a_i x_i(mu0)^b = c0^b c^(bd), which is monotone in mu0. A single
bisection on mu0 with the budget branch chosen by the closed-form inequality
is only monotone when b*d < 1; the nested form covers b*d >= 1 as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class StylizedError(ValueError):
    pass


@dataclass(frozen=True)
class StylizedInstance:
    beta: np.ndarray  # utility weights, simplex (zero entries pin the dimension to its floor)
    a: np.ndarray  # CES weights, positive simplex
    b: float  # CES curvature, > 1
    c0: float  # cost-frontier intercept, > 0
    d: float  # cost-frontier exponent, in (0, 1]
    R: np.ndarray  # compliance floors, in [0, 1)
    B: float  # budget cap, > 0
    lam: float  # cost sensitivity, >= 0

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        a = np.asarray(self.a, dtype=float)
        R = np.asarray(self.R, dtype=float)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "R", R)
        if not (beta.shape == a.shape == R.shape):
            raise StylizedError("beta, a, R must share one dimension")
        if abs(beta.sum() - 1.0) > 1e-9 or np.any(beta < 0):
            raise StylizedError("beta must be a nonnegative simplex vector")
        if abs(a.sum() - 1.0) > 1e-9 or np.any(a <= 0):
            raise StylizedError("a must be a positive simplex vector")
        if not self.b > 1.0:
            raise StylizedError("curvature b must exceed 1 for the closed-form solver")
        if not (0.0 < self.d <= 1.0):
            raise StylizedError("d must lie in (0, 1]")
        if self.c0 <= 0:
            raise StylizedError("c0 must be positive")
        if np.any(R < 0) or np.any(R >= 1.0):
            raise StylizedError("floors must lie in [0, 1)")
        if self.B <= 0:
            raise StylizedError("budget must be positive")
        if self.lam < 0:
            raise StylizedError("lambda must be nonnegative")

    @property
    def dim(self) -> int:
        return self.beta.size

    def objective(self, x, c: float) -> float:
        return float(self.beta @ np.asarray(x, dtype=float) - self.lam * c)


@dataclass(frozen=True)
class StylizedSolution:
    x_star: np.ndarray
    c_star: float
    mu0: float
    regimes: tuple[str, ...]  # per-dimension: floor | interior | ceiling
    budget_binding: bool
    kkt_residual: float
    objective: float
    flags: tuple[str, ...] = field(default=())

    @property
    def interior(self) -> np.ndarray:
        return np.array([r == "interior" for r in self.regimes])


def check_nondegeneracy(inst: StylizedInstance) -> dict:
    """Frontier must strictly dominate the compliance floors at the budget cap."""
    lhs = float(inst.a @ inst.R**inst.b)
    rhs = float(inst.c0**inst.b * inst.B ** (inst.b * inst.d))
    return {"ok": lhs < rhs, "slack": rhs - lhs, "floor_mass": lhs, "frontier_mass": rhs}


def _x_of_mu(inst: StylizedInstance, mu0: float) -> np.ndarray:
    with np.errstate(over="ignore", divide="ignore"):
        ratio = inst.beta / (mu0 * inst.a * inst.b)
        interior = ratio ** (1.0 / (inst.b - 1.0))
    return np.clip(interior, inst.R, 1.0)


def _W(inst: StylizedInstance, x: np.ndarray) -> float:
    return float(inst.a @ x**inst.b)


def _mu_bounds_for_x(inst: StylizedInstance, x: np.ndarray, tol: float = 1e-12):
    """Interval of mu0 values consistent with the regime pattern of x.

    Zero floors never bind against a positive utility weight, so a dimension
    with R_i = 0 and beta_i > 0 stays interior-pinned however small x_i is.
    """
    lo, hi = 0.0, np.inf
    for i in range(inst.dim):
        if x[i] >= 1.0 - tol:
            hi = min(hi, inst.beta[i] / (inst.a[i] * inst.b))
        elif inst.R[i] > 0.0 and x[i] <= inst.R[i] + tol:
            if inst.beta[i] > 0.0:
                lo = max(lo, inst.beta[i] / (inst.a[i] * inst.b * inst.R[i] ** (inst.b - 1.0)))
        elif inst.beta[i] == 0.0:
            continue  # pinned at its floor by a zero weight; no multiplier constraint
        else:
            pinned = inst.beta[i] / (inst.a[i] * inst.b * max(x[i], 1e-300) ** (inst.b - 1.0))
            return pinned, pinned
    return lo, hi


def _mu_for_mass(inst: StylizedInstance, target: float, seed: float = 1.0) -> float:
    """Bisection for mu0 with a @ x(mu0)^b = target; the mass is nonincreasing in mu0."""
    ceil_x = np.where(inst.beta > 0, 1.0, inst.R)
    target = float(np.clip(target, inst.a @ inst.R**inst.b, inst.a @ ceil_x**inst.b))
    lo = hi = float(seed)
    for _ in range(400):
        if _W(inst, _x_of_mu(inst, lo)) >= target:
            break
        lo /= 4.0
    else:
        raise StylizedError(f"bracket failure: frontier mass below target down to mu0={lo:g}")
    for _ in range(400):
        if _W(inst, _x_of_mu(inst, hi)) <= target:
            break
        hi *= 4.0
    else:
        raise StylizedError(f"bracket failure: frontier mass above target up to mu0={hi:g}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _W(inst, _x_of_mu(inst, mid)) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _marginal_price(inst: StylizedInstance, c: float) -> float:
    """k(c) = c0^b * b * d * c^(bd-1): frontier-mass gain per unit cost, scaled."""
    return inst.c0**inst.b * inst.b * inst.d * c ** (inst.b * inst.d - 1.0)


def _cost_gradient(inst: StylizedInstance, c: float, seed: float = 1.0) -> float:
    """V'(c): envelope derivative of the optimal-value function; nonincreasing in c."""
    target = inst.c0**inst.b * c ** (inst.b * inst.d)
    mu = _mu_for_mass(inst, target, seed)
    x = _x_of_mu(inst, mu)
    lo, hi = _mu_bounds_for_x(inst, x)
    k = _marginal_price(inst, c)
    mu_cost = inst.lam / k if inst.lam > 0 else 0.0
    return float(np.clip(mu_cost, lo, hi) * k - inst.lam)


def solve_given_mu0(inst: StylizedInstance, mu0: float) -> tuple[np.ndarray, float]:
    """Raw three-regime formulas for a given frontier multiplier."""
    if mu0 <= 0:
        raise StylizedError("mu0 must be positive")
    x = _x_of_mu(inst, mu0)
    bd = inst.b * inst.d
    gate = mu0 * inst.c0**inst.b * inst.b * inst.d
    if abs(bd - 1.0) < 1e-12:
        if gate >= inst.lam:
            return x, inst.B
        raise StylizedError("bd = 1 with interior-cost condition: cost level degenerate")
    if gate * inst.B ** (bd - 1.0) >= inst.lam:
        return x, inst.B
    c = (inst.lam / gate) ** (1.0 / (bd - 1.0))
    return x, float(c)


def _interior_polish(inst: StylizedInstance, mu_seed: float):
    """Solve the interior-cost branch directly: find mu0 with
    a @ x(mu0)^b = c0^b c_int(mu0)^(bd), c_int from cost stationarity.

    Used as a refinement when the cost is slack: building (x, c) from one
    multiplier makes every stationarity condition exact by construction,
    which the outer bisection cannot guarantee near degenerate corners
    (for example b close to 1 with zero floors, where optimal coordinates
    collapse below float resolution of the frontier mass). Returns None when
    no local root exists or the result is infeasible.
    """
    bd = inst.b * inst.d
    if inst.lam <= 0 or abs(bd - 1.0) < 1e-9 or not np.isfinite(mu_seed) or mu_seed <= 0:
        return None
    gate = inst.c0**inst.b * inst.b * inst.d

    def c_int(mu):
        return (inst.lam / (mu * gate)) ** (1.0 / (bd - 1.0))

    def h(mu):
        return _W(inst, _x_of_mu(inst, mu)) - inst.c0**inst.b * c_int(mu) ** bd

    h_seed = h(mu_seed)
    if h_seed == 0.0:
        root = mu_seed
    else:
        lo = hi = mu_seed
        bracket = None
        for _ in range(80):
            lo /= 2.0
            hi *= 2.0
            if np.sign(h(lo)) != np.sign(h_seed):
                bracket = (lo, lo * 2.0)
                break
            if np.sign(h(hi)) != np.sign(h_seed):
                bracket = (hi / 2.0, hi)
                break
        if bracket is None:
            return None
        u, v = bracket
        hu = h(u)
        for _ in range(200):
            mid = 0.5 * (u + v)
            if mid == u or mid == v:
                break
            hm = h(mid)
            if (hm > 0) == (hu > 0):
                u, hu = mid, hm
            else:
                v = mid
        root = 0.5 * (u + v)
    c = c_int(root)
    if not np.isfinite(c) or c <= 0 or c > inst.B * (1.0 + 1e-12):
        return None
    return _assemble(inst, root, min(c, inst.B), budget_binding=False)


def _classify(inst: StylizedInstance, x: np.ndarray, tol: float = 1e-9) -> tuple[str, ...]:
    regimes = []
    for i in range(inst.dim):
        if x[i] >= 1.0 - tol:
            regimes.append("ceiling")
        elif x[i] <= inst.R[i] + tol:
            regimes.append("floor")
        else:
            regimes.append("interior")
    return tuple(regimes)


def solve(inst: StylizedInstance, bisect_seed: float = 1.0) -> StylizedSolution:
    """Solve the stylized program; certifies the result with a KKT residual."""
    check = check_nondegeneracy(inst)
    if not check["ok"]:
        raise StylizedError(
            f"degenerate instance: floor mass {check['floor_mass']:.6g} does not lie "
            f"strictly below frontier mass {check['frontier_mass']:.6g} at the cap"
        )
    flags: list[str] = []
    bd = inst.b * inst.d
    W_R = float(inst.a @ inst.R**inst.b)
    ceil_x = np.where(inst.beta > 0, 1.0, inst.R)
    W_max = float(inst.a @ ceil_x**inst.b)
    c_floor = (W_R / inst.c0**inst.b) ** (1.0 / bd) if W_R > 0 else 0.0
    c_ones = (W_max / inst.c0**inst.b) ** (1.0 / bd)
    c_hi = min(inst.B, c_ones)

    if c_hi <= c_floor * (1.0 + 1e-14):
        # every dimension pinned by its floor at the smallest feasible cost
        mu = _mu_for_mass(inst, W_R, bisect_seed)
        return _assemble(inst, mu, c_floor, budget_binding=c_floor >= inst.B * (1 - 1e-12),
                         flags=("floor_saturated",))

    if _cost_gradient(inst, c_hi, bisect_seed) >= 0.0:
        c_star = c_hi
        budget_binding = inst.B <= c_ones
        if not budget_binding:
            flags.append("ceiling_saturated")
    else:
        lo = c_floor if c_floor > 0 else c_hi * 1e-14
        if _cost_gradient(inst, lo, bisect_seed) < 0.0:
            # the gradient can collapse numerically just above a floor corner
            # (frontier mass indistinguishable from the floor mass in floats);
            # the direct interior-branch solve disambiguates it from a true corner
            polished = _interior_polish(inst, inst.lam / _marginal_price(inst, max(lo, 1e-300)))
            if polished is not None and polished.kkt_residual <= 1e-8:
                return polished
            if c_floor > 0:
                mu = _mu_for_mass(inst, W_R, bisect_seed)
                return _assemble(inst, mu, c_floor, budget_binding=False,
                                 flags=("floor_saturated",))
            # spending anything at all is unprofitable: corner solution at the origin
            return StylizedSolution(
                x_star=inst.R.copy(),
                c_star=0.0,
                mu0=0.0,
                regimes=tuple("floor" for _ in range(inst.dim)),
                budget_binding=False,
                kkt_residual=0.0,
                objective=inst.objective(inst.R, 0.0),
                flags=("zero_solution",),
            )
        hi = c_hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if _cost_gradient(inst, mid, bisect_seed) >= 0.0:
                lo = mid
            else:
                hi = mid
        c_star = 0.5 * (lo + hi)
        budget_binding = False

    target = inst.c0**inst.b * c_star ** (inst.b * inst.d)
    mu = _mu_for_mass(inst, min(target, W_max), bisect_seed)
    sol = _assemble(inst, mu, c_star, budget_binding, flags=tuple(flags))
    if not budget_binding and sol.kkt_residual > 1e-9:
        polished = _interior_polish(inst, inst.lam / _marginal_price(inst, c_star))
        if polished is not None and polished.kkt_residual < sol.kkt_residual:
            return polished
    return sol


def _assemble(
    inst: StylizedInstance, mu: float, c: float, budget_binding: bool, flags=()
) -> StylizedSolution:
    x = _x_of_mu(inst, mu)
    # snap hairline boundary overshoots left by the bisections, then pick the
    # multiplier with the regime tolerance used for certification (looser than
    # the one driving the bisection, which converges onto its own edge);
    # zero floors are exempt since tiny coordinates there are genuinely interior
    x = np.where((inst.R > 0.0) & (x - inst.R <= 1e-12), inst.R, x)
    x = np.where(1.0 - x <= 1e-12, 1.0, x)
    lo, hi = _mu_bounds_for_x(inst, x, tol=1e-9)
    if not budget_binding and c > 0:
        # re-derive the cost from the frontier equality so it holds exactly
        c = float((_W(inst, x) / inst.c0**inst.b) ** (1.0 / (inst.b * inst.d)))
        c = min(c, inst.B)
    k = _marginal_price(inst, c) if c > 0 else np.inf
    mu_cost = inst.lam / k if np.isfinite(k) and k > 0 else mu
    mu0 = float(min(max(mu_cost, lo), hi))
    sol = StylizedSolution(
        x_star=x,
        c_star=float(c),
        mu0=mu0,
        regimes=_classify(inst, x),
        budget_binding=budget_binding,
        kkt_residual=0.0,
        objective=inst.objective(x, c),
        flags=tuple(flags),
    )
    residual = kkt_residuals(inst, sol)["max_residual"]
    object.__setattr__(sol, "kkt_residual", residual)
    return sol


def kkt_residuals(inst: StylizedInstance, sol: StylizedSolution) -> dict:
    """Stationarity, dual-feasibility, frontier-equality, and complementary-
    slackness residuals for a candidate solution."""
    x, c, mu0 = sol.x_star, sol.c_star, sol.mu0
    if "zero_solution" in sol.flags:
        return {"max_residual": 0.0, "frontier": 0.0, "stationarity_x": 0.0,
                "stationarity_c": 0.0, "dual": 0.0, "complementarity": 0.0,
                "primal": 0.0}
    frontier = abs(_W(inst, x) - inst.c0**inst.b * c ** (inst.b * inst.d))
    stat_x = 0.0
    dual = 0.0
    comp = 0.0
    grad = mu0 * inst.a * inst.b * np.maximum(x, 0.0) ** (inst.b - 1.0)
    for i, regime in enumerate(sol.regimes):
        if regime == "interior":
            stat_x = max(stat_x, abs(inst.beta[i] - grad[i]))
        elif regime == "floor":
            mu_minus = grad[i] - inst.beta[i]
            dual = max(dual, max(0.0, -mu_minus))
            comp = max(comp, abs(mu_minus * (inst.R[i] - x[i])))
        else:
            mu_plus = inst.beta[i] - grad[i]
            dual = max(dual, max(0.0, -mu_plus))
            comp = max(comp, abs(mu_plus * (x[i] - 1.0)))
    k = _marginal_price(inst, c) if c > 0 else 0.0
    if sol.budget_binding:
        nu_plus = mu0 * k - inst.lam
        stat_c = max(0.0, -nu_plus)
        comp = max(comp, abs(nu_plus * (c - inst.B)))
    else:
        stat_c = abs(mu0 * k - inst.lam)
    primal = max(
        float(np.max(np.maximum(inst.R - x, 0.0))),
        float(np.max(np.maximum(x - 1.0, 0.0))),
        max(0.0, c - inst.B),
        max(0.0, -c),
    )
    out = {
        "frontier": frontier,
        "stationarity_x": stat_x,
        "stationarity_c": stat_c,
        "dual": dual,
        "complementarity": comp,
        "primal": primal,
    }
    out["max_residual"] = max(out.values())
    return out


def _interior_mass(inst: StylizedInstance, sol: StylizedSolution) -> float:
    mask = sol.interior
    return float(inst.a[mask] @ sol.x_star[mask] ** inst.b)


def budget_sensitivity(inst: StylizedInstance, sol: StylizedSolution):
    """Common budget elasticity of all interior measures: eps_B = d W*/Y*."""
    if not sol.budget_binding:
        raise StylizedError("budget sensitivity requires a binding budget")
    Y = _interior_mass(inst, sol)
    if Y <= 0.0:
        raise StylizedError("budget sensitivity requires a nonempty interior set")
    W = _W(inst, sol.x_star)
    eps_B = inst.d * W / Y
    dx = np.where(sol.interior, eps_B * sol.x_star / inst.B, 0.0)
    return eps_B, dx


def regulatory_sensitivity(inst: StylizedInstance, sol: StylizedSolution, k: int):
    """Direct effect, spillovers onto interior measures, and the cost response
    of tightening floor k. Signs and denominators follow the fixed-active-set
    derivation; the k-th dimension is excluded from the interior mass."""
    if not (0 <= k < inst.dim):
        raise StylizedError(f"invalid dimension {k}")
    x, c = sol.x_star, sol.c_star
    direct = 1.0 if sol.regimes[k] == "floor" else 0.0
    spill = np.zeros(inst.dim)
    dc = 0.0
    if sol.regimes[k] != "floor":
        return direct, spill, dc
    interior = sol.interior.copy()
    interior[k] = False
    Y_prime = float(inst.a[interior] @ x[interior] ** inst.b)
    pressure = inst.a[k] * x[k] ** (inst.b - 1.0)
    if sol.budget_binding:
        if Y_prime <= 0.0:
            raise StylizedError("spillover formula needs interior dimensions")
        spill[interior] = -pressure * x[interior] / Y_prime
        return direct, spill, 0.0
    W = _W(inst, x)
    ratio = (inst.b * inst.d - 1.0) / (inst.b - 1.0)
    denom = inst.d * W - ratio * Y_prime
    if abs(denom) < 1e-12:
        raise StylizedError("degenerate cost-response denominator (d = 1, full interior)")
    dc = pressure * c / denom
    spill[interior] = ratio * x[interior] * dc / c
    return direct, spill, float(dc)


def technology_sensitivity(inst: StylizedInstance, sol: StylizedSolution):
    """Elasticities for frontier level c0 and returns d, plus the curvature
    reallocation terms eta_i = (gamma - ln x_i)/(b - 1)."""
    if not sol.budget_binding:
        raise StylizedError("technology sensitivity requires a binding budget")
    Y = _interior_mass(inst, sol)
    if Y <= 0.0:
        raise StylizedError("technology sensitivity requires a nonempty interior set")
    x = sol.x_star
    W = _W(inst, x)
    terms = inst.a * x**inst.b
    logs = np.where(x > 0.0, np.log(np.maximum(x, 1e-300)), 0.0)
    Z = float(terms @ logs)
    Z_int = float(terms[sol.interior] @ logs[sol.interior])
    eps_c = W / Y
    eps_d = (W / Y) * np.log(inst.B)
    gamma = Z_int / Y + ((inst.b - 1.0) / inst.b) * (W / Y) * (
        np.log(inst.c0) + inst.d * np.log(inst.B) - Z / W
    )
    eta = np.where(sol.interior, (gamma - logs) / (inst.b - 1.0), 0.0)
    return float(eps_c), float(eps_d), float(gamma), eta


@dataclass(frozen=True)
class SensitivityReport:
    W_star: float
    Y_star: float
    Z_star: float
    Z_int_star: float
    budget_binding: bool
    eps_B: float | None
    dx_dB: np.ndarray | None
    spillovers: np.ndarray  # (k, i) matrix; row k also carries the direct effect on its diagonal
    dc_dRk: np.ndarray
    eps_c: float | None
    eps_d: float | None
    eta_b: np.ndarray | None
    gamma: float | None


def sensitivity_report(inst: StylizedInstance, sol: StylizedSolution) -> SensitivityReport:
    x = sol.x_star
    terms = inst.a * x**inst.b
    logs = np.where(x > 0.0, np.log(np.maximum(x, 1e-300)), 0.0)
    W = float(terms.sum())
    Y = _interior_mass(inst, sol)
    Z = float(terms @ logs)
    Z_int = float(terms[sol.interior] @ logs[sol.interior])
    eps_B = dx_dB = eps_c = eps_d = gamma = eta = None
    if sol.budget_binding and Y > 0.0:
        eps_B, dx_dB = budget_sensitivity(inst, sol)
        eps_c, eps_d, gamma, eta = technology_sensitivity(inst, sol)
    spill = np.zeros((inst.dim, inst.dim))
    dc = np.zeros(inst.dim)
    for k in range(inst.dim):
        try:
            direct, row, dck = regulatory_sensitivity(inst, sol, k)
        except StylizedError:
            direct, row, dck = (1.0 if sol.regimes[k] == "floor" else 0.0), np.full(inst.dim, np.nan), np.nan
        spill[k] = row
        spill[k, k] = direct
        dc[k] = dck
    return SensitivityReport(
        W_star=W,
        Y_star=Y,
        Z_star=Z,
        Z_int_star=Z_int,
        budget_binding=sol.budget_binding,
        eps_B=eps_B,
        dx_dB=dx_dB,
        spillovers=spill,
        dc_dRk=dc,
        eps_c=eps_c,
        eps_d=eps_d,
        eta_b=eta,
        gamma=gamma,
    )
