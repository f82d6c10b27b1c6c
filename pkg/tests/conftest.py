import numpy as np
import pytest

from deployselect.bundle import ArtifactBundle
from deployselect.catalog import load_catalog, load_schema
from deployselect.frontier import FrontierFit, peel_and_tier
from deployselect.measures import measures_from_rows
from deployselect.utility import UtilityModel

from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"

# Eight-model conversational benchmark snapshot: measure coordinates in [0,1]^2
# and blended per-interaction prices. Group weight vectors are the fitted
# per-user-type normalized logistic coefficients for the same snapshot.
PRISM_WEIGHTS = {
    "ethics": (1.000, 0.000),
    "safety": (0.017, 0.983),
    "general": (0.579, 0.421),
}
PRISM_FRONTIER = {"a": (0.53, 0.47), "b": 2.67, "c0": 0.49, "d": 0.21}
PRISM_TIER_LEVELS = (0.52, 0.66, 0.79)


def linear_weight_model(weights) -> UtilityModel:
    w = np.asarray(weights, dtype=float)
    return UtilityModel(
        kind="linear_logistic",
        intercept=0.0,
        coefficients=w.copy(),
        normalized_weights=w / w.sum(),
        linear_index=True,
    )


@pytest.fixture(scope="session")
def prism_catalog():
    return load_catalog(FIXTURES / "prism_models.csv", load_schema(FIXTURES / "prism_schema.json"))


@pytest.fixture(scope="session")
def prism_measures(prism_catalog):
    return measures_from_rows(
        prism_catalog.model_ids,
        [[m.raw_capabilities["C1"], m.raw_capabilities["C2"]] for m in prism_catalog.models],
    )


@pytest.fixture(scope="session")
def prism_frontier(prism_measures):
    tiers = peel_and_tier(prism_measures, 3, 0.0)
    levels = np.array(PRISM_TIER_LEVELS)
    tier_costs = (levels / PRISM_FRONTIER["c0"]) ** (1.0 / PRISM_FRONTIER["d"])
    return FrontierFit(
        a=np.array(PRISM_FRONTIER["a"]),
        b=PRISM_FRONTIER["b"],
        tier_levels=levels,
        c0=PRISM_FRONTIER["c0"],
        d=PRISM_FRONTIER["d"],
        tier_costs=tier_costs,
        fit_loss=0.0,
        tier_structure=tiers,
    )


@pytest.fixture(scope="session")
def prism_utilities():
    return {name: linear_weight_model(w) for name, w in PRISM_WEIGHTS.items()}


@pytest.fixture(scope="session")
def prism_bundle(prism_catalog, prism_measures, prism_frontier, prism_utilities):
    return ArtifactBundle(
        catalog=prism_catalog,
        scaler=prism_measures.scaler,
        loading_matrix=prism_measures.loading_matrix,
        measure_set=prism_measures,
        frontier_fit=prism_frontier,
        utility_models=prism_utilities,
    )


@pytest.fixture(scope="session")
def prism_bundle_path(prism_bundle, tmp_path_factory):
    from deployselect.bundle import save_bundle

    path = tmp_path_factory.mktemp("bundle") / "prism_bundle.json"
    save_bundle(prism_bundle, path)
    return path
