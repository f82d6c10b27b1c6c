"""Internal-measure extraction from raw capability descriptors.

Pipeline: column standardization -> principal-axis factor loadings ->
varimax rotation and sparsification -> regression-method factor scores ->
per-factor min-max scaling into [0,1]. A bypass mode passes already
normalized descriptors through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import Catalog, CatalogError, ScalerParams, apply_scaler, minmax_scale


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class LoadingMatrix:
    loadings: np.ndarray  # d_raw x I
    factor_count: int
    explained_variance: np.ndarray  # per-factor eigenvalue shares
    rotated: bool = False
    sparsified: bool = False

    def __post_init__(self):
        if self.factor_count < 1:
            raise MeasureError("factor_count must be >= 1")
        if not np.all(np.isfinite(self.loadings)):
            raise MeasureError("loadings must be finite")


@dataclass(frozen=True)
class MeasureSet:
    model_ids: tuple[str, ...]
    measures: np.ndarray  # n_models x I, each coordinate in [0,1]
    scaler: ScalerParams
    loading_matrix: LoadingMatrix
    degenerate_columns: tuple[int, ...] = ()

    @property
    def factor_count(self) -> int:
        return self.measures.shape[1]

    def row(self, model_id: str) -> np.ndarray:
        return self.measures[self.model_ids.index(model_id)]


def standardize(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Center/scale columns to mean 0, sample sd 1 (ddof=1). Returns (Z, mean, sd, flags)."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] < 2:
        raise MeasureError("standardize needs at least 2 rows")
    mean = values.mean(axis=0)
    sd = values.std(axis=0, ddof=1)
    degenerate = sd == 0.0
    safe_sd = np.where(degenerate, 1.0, sd)
    z = (values - mean) / safe_sd
    z[:, degenerate] = 0.0
    return z, mean, sd, degenerate


def fit_loadings(standardized: np.ndarray, factor_count: int) -> LoadingMatrix:
    """Principal-axis extraction: top eigenvectors of the correlation matrix
    scaled by the square roots of their eigenvalues."""
    z = np.asarray(standardized, dtype=float)
    n, d = z.shape
    if factor_count > min(n - 1, d):
        raise MeasureError(
            f"factor_count {factor_count} exceeds min(rows-1, columns) = {min(n - 1, d)}"
        )
    corr = z.T @ z / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(corr)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    rank = int(np.sum(eigvals > 1e-10))
    if rank < factor_count:
        raise MeasureError(
            f"rank deficiency: achievable rank {rank} below requested {factor_count} factors"
        )
    top_vals = eigvals[:factor_count]
    top_vecs = eigvecs[:, :factor_count]
    # deterministic sign: dominant coordinate of each eigenvector is positive
    for j in range(factor_count):
        k = int(np.argmax(np.abs(top_vecs[:, j])))
        if top_vecs[k, j] < 0:
            top_vecs[:, j] = -top_vecs[:, j]
    loadings = top_vecs * np.sqrt(top_vals)
    shares = eigvals[:factor_count] / eigvals.sum()
    return LoadingMatrix(
        loadings=loadings,
        factor_count=factor_count,
        explained_variance=shares,
    )


def varimax_criterion(loadings: np.ndarray) -> float:
    """Sum over factors of the variance of squared loadings."""
    sq = loadings**2
    return float(np.sum(sq.var(axis=0)))


def _varimax_rotate(loadings: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Kaiser's raw varimax by iterated pairwise plane rotations.

    Returns the rotated loadings and the criterion value after each sweep
    (nondecreasing by construction: every plane rotation is angle-optimal).
    """
    L = np.array(loadings, dtype=float)
    d, k = L.shape
    history = [varimax_criterion(L)]
    if k < 2:
        return L, history
    for _ in range(max_sweeps):
        for p in range(k - 1):
            for q in range(p + 1, k):
                x, y = L[:, p], L[:, q]
                u = x * x - y * y
                v = 2.0 * x * y
                a, b = u.sum(), v.sum()
                c = (u * u - v * v).sum()
                dd = 2.0 * (u * v).sum()
                num = dd - 2.0 * a * b / d
                den = c - (a * a - b * b) / d
                phi = 0.25 * np.arctan2(num, den)
                if abs(phi) < 1e-14:
                    continue
                cs, sn = np.cos(phi), np.sin(phi)
                L[:, p], L[:, q] = cs * x + sn * y, -sn * x + cs * y
        history.append(varimax_criterion(L))
        if history[-1] - history[-2] <= tol * max(1.0, abs(history[-2])):
            break
    return L, history


def refine_loadings(lm: LoadingMatrix, threshold: float, max_per_row: int) -> LoadingMatrix:
    """Varimax-rotate, then sparsify: zero |loading| < threshold and keep only
    the max_per_row largest-magnitude entries per row."""
    if not (0.0 <= threshold < 1.0):
        raise MeasureError("threshold must be in [0,1)")
    if max_per_row < 1:
        raise MeasureError("max_per_row must be >= 1")
    rotated, _ = _varimax_rotate(lm.loadings)
    sparse = rotated.copy()
    sparse[np.abs(sparse) < threshold] = 0.0
    k = sparse.shape[1]
    if max_per_row < k:
        for i in range(sparse.shape[0]):
            order = np.argsort(np.abs(sparse[i]))[::-1]
            sparse[i, order[max_per_row:]] = 0.0
    dead = np.nonzero(~np.any(sparse != 0.0, axis=1))[0]
    if dead.size:
        raise MeasureError(f"sparsification zeroed every loading in row(s) {dead.tolist()}")
    return LoadingMatrix(
        loadings=sparse,
        factor_count=lm.factor_count,
        explained_variance=lm.explained_variance,
        rotated=True,
        sparsified=True,
    )


@dataclass(frozen=True)
class ExtractionConfig:
    factor_count: int = 2
    threshold: float = 0.0
    max_per_row: int | None = None
    bypass: bool = False


def extract_measures(catalog: Catalog, config: ExtractionConfig) -> MeasureSet:
    """Run the full extraction pipeline on a catalog's capability table."""
    raw = catalog.capability_matrix()
    if config.bypass:
        if np.any(raw < 0.0) or np.any(raw > 1.0):
            raise MeasureError("bypass mode requires capabilities already in [0,1]")
        d = raw.shape[1]
        identity = LoadingMatrix(
            loadings=np.eye(d),
            factor_count=d,
            explained_variance=np.full(d, 1.0 / d),
        )
        scaler = ScalerParams(
            minimum=np.zeros(d), maximum=np.ones(d), degenerate=np.zeros(d, dtype=bool)
        )
        return MeasureSet(
            model_ids=catalog.model_ids,
            measures=raw,
            scaler=scaler,
            loading_matrix=identity,
        )

    z, _, _, flags = standardize(raw)
    lm = fit_loadings(z, config.factor_count)
    max_per_row = config.max_per_row if config.max_per_row is not None else lm.factor_count
    lm = refine_loadings(lm, config.threshold, max_per_row)
    scores = z @ np.linalg.pinv(lm.loadings).T

    # orientation: each factor correlates nonnegatively with its largest-loading raw column
    loadings = lm.loadings.copy()
    for j in range(lm.factor_count):
        anchor = int(np.argmax(np.abs(loadings[:, j])))
        corr = float(scores[:, j] @ z[:, anchor])
        if corr < 0:
            scores[:, j] = -scores[:, j]
            loadings[:, j] = -loadings[:, j]
    lm = LoadingMatrix(
        loadings=loadings,
        factor_count=lm.factor_count,
        explained_variance=lm.explained_variance,
        rotated=lm.rotated,
        sparsified=lm.sparsified,
    )

    scaled, scaler = minmax_scale(scores)
    return MeasureSet(
        model_ids=catalog.model_ids,
        measures=scaled,
        scaler=scaler,
        loading_matrix=lm,
        degenerate_columns=tuple(int(i) for i in np.nonzero(flags)[0]),
    )


def measures_from_rows(model_ids, rows) -> MeasureSet:
    """Build a MeasureSet from externally supplied [0,1] coordinates (fixtures, bundles)."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise MeasureError("measure rows must be 2-D")
    if np.any(rows < -1e-12) or np.any(rows > 1.0 + 1e-12):
        raise CatalogError("measure coordinates must lie in [0,1]")
    d = rows.shape[1]
    identity = LoadingMatrix(
        loadings=np.eye(d), factor_count=d, explained_variance=np.full(d, 1.0 / d)
    )
    scaler = ScalerParams(
        minimum=np.zeros(d), maximum=np.ones(d), degenerate=np.zeros(d, dtype=bool)
    )
    return MeasureSet(
        model_ids=tuple(model_ids), measures=rows, scaler=scaler, loading_matrix=identity
    )
