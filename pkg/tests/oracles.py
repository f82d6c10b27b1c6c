"""Independent reference solvers and generators shared across test modules."""

import warnings

import numpy as np
from scipy.optimize import NonlinearConstraint, minimize

from deployselect.stylized import StylizedInstance, check_nondegeneracy


def random_instance(rng, dims=(2, 3, 4)) -> StylizedInstance:
    """Random nondegenerate instance (resamples until Assumption-5 holds)."""
    for _ in range(200):
        I = int(rng.choice(dims))
        beta = rng.uniform(0.05, 1.0, I)
        beta /= beta.sum()
        a = rng.uniform(0.1, 1.0, I)
        a /= a.sum()
        b = rng.uniform(1.1, 4.0)
        d = rng.uniform(0.05, 1.0)
        c0 = rng.uniform(0.3, 2.0)
        R = rng.uniform(0.0, 0.5, I) * (rng.random(I) < 0.7)
        B = rng.uniform(0.2, 5.0)
        lam = rng.uniform(1e-3, 1.0)
        inst = StylizedInstance(beta=beta, a=a, b=b, c0=c0, d=d, R=R, B=B, lam=lam)
        if check_nondegeneracy(inst)["ok"]:
            return inst
    raise RuntimeError("could not draw a nondegenerate instance")


def reference_objective(inst: StylizedInstance, starts: int = 10, seed: int = 0) -> float:
    """Multistart SQP solve of the full constrained program in (x, c)."""
    rng = np.random.default_rng(seed)
    I = inst.dim

    def neg_obj(z):
        return -(inst.beta @ z[:I] - inst.lam * z[I])

    def frontier_slack(z):
        x, c = z[:I], max(z[I], 0.0)
        return inst.c0**inst.b * c ** (inst.b * inst.d) - float(
            inst.a @ np.clip(x, 0.0, None) ** inst.b
        )

    constraint = NonlinearConstraint(frontier_slack, 0.0, np.inf)
    bounds = [(inst.R[i], 1.0) for i in range(I)] + [(0.0, inst.B)]
    best = -np.inf
    for _ in range(starts):
        z0 = np.array([rng.uniform(lo, hi) for lo, hi in bounds])
        need = (float(inst.a @ z0[:I] ** inst.b) / inst.c0**inst.b) ** (
            1.0 / (inst.b * inst.d)
        )
        if need > inst.B:
            z0[:I] = inst.R + 0.5 * (z0[:I] - inst.R)
            need = (float(inst.a @ z0[:I] ** inst.b) / inst.c0**inst.b) ** (
                1.0 / (inst.b * inst.d)
            )
        z0[I] = min(max(need * 1.01, z0[I]), inst.B)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(
                neg_obj, z0, method="SLSQP", bounds=bounds, constraints=[constraint],
                options={"maxiter": 300, "ftol": 1e-14},
            )
        if res.success and frontier_slack(res.x) > -1e-9:
            best = max(best, -res.fun)
    return best


def random_feasible_points(inst: StylizedInstance, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Uniform draws from the box, costed at the cheapest attaining spend."""
    X = rng.uniform(inst.R, 1.0, (n, inst.dim))
    mass = np.clip(X, 0.0, None) ** inst.b @ inst.a
    costs = (mass / inst.c0**inst.b) ** (1.0 / (inst.b * inst.d))
    keep = costs <= inst.B
    return X[keep], costs[keep]
