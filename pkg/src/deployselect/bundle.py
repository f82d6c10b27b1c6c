"""Artifact bundle: one JSON document carrying the catalog, scaler, loadings,
measures, frontier fit, and utility models, with a schema version and a
catalog digest. Fitting writes bundles; recommendation and serving only read
them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .catalog import Catalog, CatalogError, ModelRecord, ScalerParams
from .frontier import FrontierFit, TierStructure
from .measures import LoadingMatrix, MeasureSet
from .utility import UtilityModel

SCHEMA_VERSION = "1"


class BundleError(ValueError):
    pass


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def catalog_digest(catalog: Catalog) -> str:
    payload = canonical_json(_catalog_to_dict(catalog))
    return "sha256:" + hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ArtifactBundle:
    catalog: Catalog
    scaler: ScalerParams | None = None
    loading_matrix: LoadingMatrix | None = None
    measure_set: MeasureSet | None = None
    frontier_fit: FrontierFit | None = None
    utility_models: dict[str, UtilityModel] | None = None
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        dims = set()
        if self.measure_set is not None:
            dims.add(self.measure_set.factor_count)
            if tuple(self.measure_set.model_ids) != tuple(self.catalog.model_ids):
                raise BundleError("measure set does not cover the catalog")
        if self.frontier_fit is not None:
            dims.add(self.frontier_fit.a.size)
        if self.utility_models:
            dims.update(u.dim for u in self.utility_models.values())
        if len(dims) > 1:
            raise BundleError(f"inconsistent measure dimensions across artifacts: {sorted(dims)}")

    @property
    def digest(self) -> str:
        return catalog_digest(self.catalog)


def _catalog_to_dict(catalog: Catalog) -> dict:
    return {
        "capability_names": list(catalog.capability_names),
        "cost_names": list(catalog.cost_names),
        "models": [
            {
                "model_id": m.model_id,
                "raw_capabilities": {k: m.raw_capabilities[k] for k in catalog.capability_names},
                "raw_costs": {k: m.raw_costs[k] for k in catalog.cost_names},
                "cost": m.cost,
            }
            for m in catalog.models
        ],
    }


def _catalog_from_dict(data: dict) -> Catalog:
    return Catalog(
        models=tuple(
            ModelRecord(
                model_id=m["model_id"],
                raw_capabilities=dict(m["raw_capabilities"]),
                raw_costs=dict(m["raw_costs"]),
                cost=float(m["cost"]),
            )
            for m in data["models"]
        ),
        capability_names=tuple(data["capability_names"]),
        cost_names=tuple(data["cost_names"]),
    )


def bundle_to_dict(bundle: ArtifactBundle) -> dict:
    out = {
        "schema_version": bundle.schema_version,
        "catalog": _catalog_to_dict(bundle.catalog),
        "catalog_digest": bundle.digest,
    }
    if bundle.scaler is not None:
        out["scaler"] = {
            "minimum": bundle.scaler.minimum.tolist(),
            "maximum": bundle.scaler.maximum.tolist(),
            "degenerate": bundle.scaler.degenerate.astype(bool).tolist(),
        }
    if bundle.loading_matrix is not None:
        lm = bundle.loading_matrix
        out["loading_matrix"] = {
            "loadings": lm.loadings.tolist(),
            "factor_count": lm.factor_count,
            "explained_variance": np.asarray(lm.explained_variance).tolist(),
            "rotated": lm.rotated,
            "sparsified": lm.sparsified,
        }
    if bundle.measure_set is not None:
        ms = bundle.measure_set
        out["measure_set"] = {
            "model_ids": list(ms.model_ids),
            "measures": ms.measures.tolist(),
            "degenerate_columns": list(ms.degenerate_columns),
        }
    if bundle.frontier_fit is not None:
        ff = bundle.frontier_fit
        out["frontier_fit"] = {
            "a": ff.a.tolist(),
            "b": ff.b,
            "tier_levels": ff.tier_levels.tolist(),
            "c0": ff.c0,
            "d": ff.d,
            "tier_costs": ff.tier_costs.tolist(),
            "fit_loss": ff.fit_loss,
            "converged": ff.converged,
            "flags": list(ff.flags),
            "tier_structure": {
                "layers": [list(layer) for layer in ff.tier_structure.layers],
                "tiers": dict(sorted(ff.tier_structure.tiers.items())),
                "efficient": {str(t): list(v) for t, v in sorted(ff.tier_structure.efficient.items())},
                "tolerance": ff.tier_structure.tolerance,
            },
        }
    if bundle.utility_models is not None:
        out["utility_models"] = {
            g: _utility_to_dict(u) for g, u in sorted(bundle.utility_models.items())
        }
    return out


def _utility_to_dict(u: UtilityModel) -> dict:
    out = {
        "kind": u.kind,
        "intercept": u.intercept,
        "normalized_weights": u.normalized_weights.tolist(),
        "linear_index": u.linear_index,
        "flags": list(u.flags),
    }
    if u.kind == "linear_logistic":
        out["coefficients"] = u.coefficients.tolist()
    else:
        out["trees"] = list(u.trees)
        out["learning_rate"] = u.learning_rate
    return out


def _utility_from_dict(data: dict) -> UtilityModel:
    kind = data["kind"]
    return UtilityModel(
        kind=kind,
        intercept=float(data["intercept"]),
        coefficients=np.array(data["coefficients"], dtype=float) if kind == "linear_logistic" else None,
        trees=tuple(data["trees"]) if kind == "tree_ensemble" else None,
        learning_rate=float(data.get("learning_rate", 0.1)),
        normalized_weights=np.array(data["normalized_weights"], dtype=float),
        linear_index=bool(data.get("linear_index", False)),
        flags=tuple(data.get("flags", ())),
    )


def bundle_from_dict(data: dict) -> ArtifactBundle:
    if not isinstance(data, dict) or "catalog" not in data:
        raise BundleError("bundle must be a JSON object with a catalog")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise BundleError(f"unsupported bundle schema_version {version!r}")
    catalog = _catalog_from_dict(data["catalog"])
    recorded = data.get("catalog_digest")
    if recorded is not None and recorded != catalog_digest(catalog):
        raise BundleError("catalog digest mismatch: bundle was not fit on this catalog")
    scaler = None
    if "scaler" in data:
        s = data["scaler"]
        scaler = ScalerParams(
            minimum=np.array(s["minimum"], dtype=float),
            maximum=np.array(s["maximum"], dtype=float),
            degenerate=np.array(s["degenerate"], dtype=bool),
        )
    loading = None
    if "loading_matrix" in data:
        lm = data["loading_matrix"]
        loading = LoadingMatrix(
            loadings=np.array(lm["loadings"], dtype=float),
            factor_count=int(lm["factor_count"]),
            explained_variance=np.array(lm["explained_variance"], dtype=float),
            rotated=bool(lm["rotated"]),
            sparsified=bool(lm["sparsified"]),
        )
    measure_set = None
    if "measure_set" in data:
        ms = data["measure_set"]
        rows = np.array(ms["measures"], dtype=float)
        dim = rows.shape[1]
        measure_set = MeasureSet(
            model_ids=tuple(ms["model_ids"]),
            measures=rows,
            scaler=scaler
            if scaler is not None
            else ScalerParams(np.zeros(dim), np.ones(dim), np.zeros(dim, dtype=bool)),
            loading_matrix=loading
            if loading is not None
            else LoadingMatrix(np.eye(dim), dim, np.full(dim, 1.0 / dim)),
            degenerate_columns=tuple(ms.get("degenerate_columns", ())),
        )
    frontier = None
    if "frontier_fit" in data:
        ff = data["frontier_fit"]
        ts = ff["tier_structure"]
        frontier = FrontierFit(
            a=np.array(ff["a"], dtype=float),
            b=float(ff["b"]),
            tier_levels=np.array(ff["tier_levels"], dtype=float),
            c0=float(ff["c0"]),
            d=float(ff["d"]),
            tier_costs=np.array(ff["tier_costs"], dtype=float),
            fit_loss=float(ff["fit_loss"]),
            converged=bool(ff.get("converged", True)),
            flags=tuple(ff.get("flags", ())),
            tier_structure=TierStructure(
                layers=tuple(tuple(layer) for layer in ts["layers"]),
                tiers={k: int(v) for k, v in ts["tiers"].items()},
                efficient={int(t): tuple(v) for t, v in ts["efficient"].items()},
                tolerance=float(ts["tolerance"]),
            ),
        )
    utilities = None
    if "utility_models" in data:
        utilities = {g: _utility_from_dict(u) for g, u in data["utility_models"].items()}
    return ArtifactBundle(
        catalog=catalog,
        scaler=scaler,
        loading_matrix=loading,
        measure_set=measure_set,
        frontier_fit=frontier,
        utility_models=utilities,
        schema_version=version,
    )


def save_bundle(bundle: ArtifactBundle, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(bundle_to_dict(bundle)))
        fh.write("\n")


def load_bundle(path) -> ArtifactBundle:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise BundleError(f"bundle file {path}: invalid JSON ({exc})") from exc
    try:
        return bundle_from_dict(data)
    except (KeyError, TypeError, ValueError, CatalogError) as exc:
        if isinstance(exc, BundleError):
            raise
        raise BundleError(f"bundle file {path}: {exc}") from exc
