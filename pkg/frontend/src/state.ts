/**
 * Scenario form state: slider values, toggles, and per-group weight editors,
 * clamped to configured ranges and serializable to a valid scenario request.
 */

import type { ScenarioRequest } from './types';

export interface FormRanges {
  lambdaMax: number;
  budgetMax: number;
  measureCount: number;
  groups: string[];
}

export interface ScenarioFormState {
  lambda: number;
  budget: number | null; // null = uncapped
  floors: number[]; // one slider per measure, in [0, 1)
  aggregation: 'per_type' | 'average' | 'robust';
  selectionStrategy: 'argmax' | 'nearest';
  costNormalization: 'raw' | 'minmax';
  groupWeights: Record<string, number>;
}

const FLOOR_CAP = 0.999; // floors live in [0, 1): the service rejects 1.0

function clamp(value: number, lo: number, hi: number): number {
  if (!Number.isFinite(value)) return lo;
  return Math.min(Math.max(value, lo), hi);
}

export function initialState(ranges: FormRanges): ScenarioFormState {
  return {
    lambda: 0,
    budget: null,
    floors: new Array(ranges.measureCount).fill(0),
    aggregation: 'average',
    selectionStrategy: 'argmax',
    costNormalization: 'raw',
    groupWeights: Object.fromEntries(ranges.groups.map((g) => [g, 1])),
  };
}

export function withLambda(state: ScenarioFormState, ranges: FormRanges, value: number): ScenarioFormState {
  return { ...state, lambda: clamp(value, 0, ranges.lambdaMax) };
}

export function withBudget(state: ScenarioFormState, ranges: FormRanges, value: number | null): ScenarioFormState {
  if (value === null) return { ...state, budget: null };
  return { ...state, budget: clamp(value, 1e-6, ranges.budgetMax) };
}

export function withFloor(state: ScenarioFormState, index: number, value: number): ScenarioFormState {
  const floors = state.floors.slice();
  if (index >= 0 && index < floors.length) {
    floors[index] = clamp(value, 0, FLOOR_CAP);
  }
  return { ...state, floors };
}

export function withGroupWeight(state: ScenarioFormState, group: string, value: number): ScenarioFormState {
  if (!(group in state.groupWeights)) return state;
  return { ...state, groupWeights: { ...state.groupWeights, [group]: clamp(value, 0, 100) } };
}

/** Weights must carry positive total mass unless each context gets its own pick. */
export function isValid(state: ScenarioFormState): boolean {
  if (state.aggregation === 'per_type') return true;
  const total = Object.values(state.groupWeights).reduce((s, w) => s + w, 0);
  return total > 0;
}

export function toScenarioRequest(state: ScenarioFormState): ScenarioRequest {
  const floors: Record<string, number> = {};
  state.floors.forEach((value, i) => {
    if (value > 0) floors[`C${i + 1}`] = value;
  });
  return {
    lambda: state.lambda,
    budget: state.budget,
    compliance_floors: floors,
    context_weights: { ...state.groupWeights },
    aggregation: state.aggregation,
    selection_strategy: state.selectionStrategy,
    cost_normalization: state.costNormalization,
  };
}
