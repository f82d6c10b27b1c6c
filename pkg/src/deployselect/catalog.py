"""Shared data model: model catalogs, interaction outcomes, scenarios, scalers.

CSV/JSON ingestion is strict: every declared column must be present and
numeric, model ids must be unique, and errors carry row/column coordinates.
All reals are stored in double precision. Catalogs and scalers are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

AGGREGATIONS = ("per_type", "average", "robust")
SELECTION_STRATEGIES = ("argmax", "nearest")
COST_NORMALIZATIONS = ("raw", "minmax")


class CatalogError(ValueError):
    """Invalid catalog/interaction/scenario input. Message carries coordinates."""


@dataclass(frozen=True)
class ModelRecord:
    model_id: str
    raw_capabilities: dict[str, float]
    raw_costs: dict[str, float]
    cost: float


@dataclass(frozen=True)
class Catalog:
    models: tuple[ModelRecord, ...]
    capability_names: tuple[str, ...]
    cost_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.models) < 2:
            raise CatalogError(f"catalog needs at least 2 models, got {len(self.models)}")
        seen = set()
        for row, m in enumerate(self.models):
            if m.model_id in seen:
                raise CatalogError(f"duplicate model_id {m.model_id!r} at row {row}")
            seen.add(m.model_id)
            for name in self.capability_names:
                _require_finite(m.raw_capabilities.get(name), m.model_id, name)
            for name in self.cost_names:
                _require_finite(m.raw_costs.get(name), m.model_id, name)
            _require_finite(m.cost, m.model_id, "cost")
            if m.cost < 0:
                raise CatalogError(f"negative cost for model {m.model_id!r}")

    @property
    def model_ids(self) -> tuple[str, ...]:
        return tuple(m.model_id for m in self.models)

    def capability_matrix(self) -> np.ndarray:
        return np.array(
            [[m.raw_capabilities[c] for c in self.capability_names] for m in self.models],
            dtype=float,
        )

    def costs(self) -> np.ndarray:
        return np.array([m.cost for m in self.models], dtype=float)

    def index_of(self, model_id: str) -> int:
        for i, m in enumerate(self.models):
            if m.model_id == model_id:
                return i
        raise CatalogError(f"unknown model_id {model_id!r}")


def _require_finite(value, model_id, column):
    if value is None:
        raise CatalogError(f"missing value for model {model_id!r}, column {column!r}")
    if not math.isfinite(value):
        raise CatalogError(f"non-finite value for model {model_id!r}, column {column!r}")


@dataclass(frozen=True)
class OutcomeRecord:
    interaction_id: str
    model_id: str
    context: dict[str, str]
    score: float | None = None
    label: int | None = None

    def __post_init__(self):
        if self.score is None and self.label is None:
            raise CatalogError(
                f"interaction {self.interaction_id!r}: needs at least one of score/label"
            )
        if self.label is not None and self.label not in (0, 1):
            raise CatalogError(f"interaction {self.interaction_id!r}: label must be 0/1")


@dataclass(frozen=True)
class Scenario:
    """Deployment scenario: cost sensitivity, caps, floors, context weighting."""

    lam: float = 0.0
    budget: float | None = None
    compliance_floors: dict[int, float] = field(default_factory=dict)
    context_weights: dict[str, float] = field(default_factory=dict)
    aggregation: str = "average"
    selection_strategy: str = "argmax"
    cost_normalization: str = "raw"

    def __post_init__(self):
        if self.lam < 0:
            raise CatalogError("lambda must be nonnegative")
        if self.budget is not None and self.budget <= 0:
            raise CatalogError("budget must be positive when set")
        for k, v in self.compliance_floors.items():
            if not (0.0 <= v < 1.0):
                raise CatalogError(f"compliance floor for measure {k} must be in [0,1)")
        if self.aggregation not in AGGREGATIONS:
            raise CatalogError(f"unknown aggregation {self.aggregation!r}")
        if self.selection_strategy not in SELECTION_STRATEGIES:
            raise CatalogError(f"unknown selection_strategy {self.selection_strategy!r}")
        if self.cost_normalization not in COST_NORMALIZATIONS:
            raise CatalogError(f"unknown cost_normalization {self.cost_normalization!r}")
        if self.aggregation != "per_type" and self.context_weights:
            if sum(self.context_weights.values()) <= 0:
                raise CatalogError("context_weights must sum to a positive value")
            if any(w < 0 for w in self.context_weights.values()):
                raise CatalogError("context_weights must be nonnegative")

    def to_json_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "budget": self.budget,
            "compliance_floors": {f"C{k + 1}": v for k, v in sorted(self.compliance_floors.items())},
            "context_weights": dict(sorted(self.context_weights.items())),
            "aggregation": self.aggregation,
            "selection_strategy": self.selection_strategy,
            "cost_normalization": self.cost_normalization,
        }


def parse_floor_key(key) -> int:
    """Floor keys are 1-based measure names ('C2') or 0-based integer indices."""
    if isinstance(key, int):
        return key
    text = str(key).strip()
    if text.upper().startswith("C") and text[1:].isdigit():
        return int(text[1:]) - 1
    if text.lstrip("-").isdigit():
        return int(text)
    raise CatalogError(f"cannot parse compliance floor key {key!r}")


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise CatalogError("scenario must be a JSON object")
    known = {
        "lambda", "budget", "compliance_floors", "context_weights",
        "aggregation", "selection_strategy", "cost_normalization",
    }
    unknown = set(data) - known
    if unknown:
        raise CatalogError(f"unknown scenario keys: {sorted(unknown)}")
    try:
        floors = {
            parse_floor_key(k): float(v)
            for k, v in (data.get("compliance_floors") or {}).items()
        }
        weights = {str(k): float(v) for k, v in (data.get("context_weights") or {}).items()}
        return Scenario(
            lam=float(data.get("lambda", 0.0)),
            budget=None if data.get("budget") is None else float(data["budget"]),
            compliance_floors=floors,
            context_weights=weights,
            aggregation=data.get("aggregation", "average"),
            selection_strategy=data.get("selection_strategy", "argmax"),
            cost_normalization=data.get("cost_normalization", "raw"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CatalogError):
            raise
        raise CatalogError(f"invalid scenario value: {exc}") from exc


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"scenario file {path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(data)


@dataclass(frozen=True)
class ColumnSchema:
    """Declares which CSV columns are capabilities, cost components, and the scalar cost."""

    capabilities: tuple[str, ...]
    costs: tuple[str, ...]
    cost_column: str

    def __post_init__(self):
        if self.cost_column not in self.costs:
            raise CatalogError(f"cost_column {self.cost_column!r} not among declared costs")


def schema_from_dict(data: dict) -> ColumnSchema:
    try:
        return ColumnSchema(
            capabilities=tuple(data["capabilities"]),
            costs=tuple(data["costs"]),
            cost_column=data["cost_column"],
        )
    except KeyError as exc:
        raise CatalogError(f"schema missing key {exc.args[0]!r}") from exc


def load_schema(path) -> ColumnSchema:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"schema file {path}: invalid JSON ({exc})") from exc
    return schema_from_dict(data)


def _parse_cell(text, row, column) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise CatalogError(f"non-numeric cell at row {row}, column {column!r}: {text!r}") from None


def load_catalog(path, schema: ColumnSchema) -> Catalog:
    """Read a models CSV against a declared column schema. Row order preserved."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        required = ["model_id", *schema.capabilities, *schema.costs]
        for col in required:
            if col not in header:
                raise CatalogError(f"missing column {col!r} in {path}")
        models = []
        seen: dict[str, int] = {}
        for row_no, row in enumerate(reader, start=2):
            mid = (row.get("model_id") or "").strip()
            if not mid:
                raise CatalogError(f"empty model_id at row {row_no}")
            if mid in seen:
                raise CatalogError(
                    f"duplicate model_id {mid!r} at row {row_no} (first seen at row {seen[mid]})"
                )
            seen[mid] = row_no
            caps = {c: _parse_cell(row[c], row_no, c) for c in schema.capabilities}
            costs = {c: _parse_cell(row[c], row_no, c) for c in schema.costs}
            models.append(
                ModelRecord(
                    model_id=mid,
                    raw_capabilities=caps,
                    raw_costs=costs,
                    cost=costs[schema.cost_column],
                )
            )
    return Catalog(
        models=tuple(models),
        capability_names=schema.capabilities,
        cost_names=schema.costs,
    )


def save_catalog(catalog: Catalog, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["model_id", *catalog.capability_names, *catalog.cost_names]
        writer.writerow(header)
        for m in catalog.models:
            row = [m.model_id]
            row += [repr(m.raw_capabilities[c]) for c in catalog.capability_names]
            row += [repr(m.raw_costs[c]) for c in catalog.cost_names]
            writer.writerow(row)


def load_interactions(path) -> list[OutcomeRecord]:
    """Read interactions CSV: interaction_id, model_id, <context...>, score?, label?."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in ("interaction_id", "model_id"):
            if col not in header:
                raise CatalogError(f"missing column {col!r} in {path}")
        context_cols = [c for c in header if c not in ("interaction_id", "model_id", "score", "label")]
        records = []
        for row_no, row in enumerate(reader, start=2):
            score = None
            label = None
            if "score" in header and row.get("score") not in (None, ""):
                score = _parse_cell(row["score"], row_no, "score")
            if "label" in header and row.get("label") not in (None, ""):
                label = int(_parse_cell(row["label"], row_no, "label"))
            records.append(
                OutcomeRecord(
                    interaction_id=row["interaction_id"],
                    model_id=row["model_id"],
                    context={c: row[c] for c in context_cols},
                    score=score,
                    label=label,
                )
            )
    return records


@dataclass(frozen=True)
class ScalerParams:
    """Per-column affine [0,1] map; degenerate marks zero-range columns."""

    minimum: np.ndarray
    maximum: np.ndarray
    degenerate: np.ndarray

    def __post_init__(self):
        if np.any(self.maximum < self.minimum):
            raise CatalogError("scaler maximum must be >= minimum per column")

    def span(self) -> np.ndarray:
        return np.where(self.degenerate, 1.0, self.maximum - self.minimum)


def minmax_scale(values: np.ndarray) -> tuple[np.ndarray, ScalerParams]:
    """Affinely map each column so min -> 0, max -> 1; constant columns map to 0."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise CatalogError("cannot scale an empty matrix")
    if values.ndim != 2 or values.shape[0] < 2:
        raise CatalogError("minmax_scale needs a 2-D matrix with at least 2 rows")
    if not np.all(np.isfinite(values)):
        raise CatalogError("minmax_scale requires finite values")
    lo = values.min(axis=0)
    hi = values.max(axis=0)
    degenerate = hi - lo == 0.0
    params = ScalerParams(minimum=lo, maximum=hi, degenerate=degenerate)
    return apply_scaler(params, values), params


def apply_scaler(params: ScalerParams, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return (values - params.minimum) / params.span()


def invert_scaler(params: ScalerParams, scaled: np.ndarray) -> np.ndarray:
    scaled = np.asarray(scaled, dtype=float)
    return scaled * params.span() + params.minimum
