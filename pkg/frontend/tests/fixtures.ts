import type { FrontierPayload, ScenarioRequest, ScenarioResponse } from '../src/types';

export const FRONTIER: FrontierPayload = {
  a: [0.53, 0.47],
  b: 2.67,
  c0: 0.49,
  d: 0.21,
  tier_levels: [0.52, 0.66, 0.79],
  tier_costs: [1.33, 4.13, 9.72],
  tier_structure: {
    tiers: { alpha: 3, bravo: 2, charlie: 1 },
    efficient: { '1': ['charlie'], '2': ['bravo'], '3': ['alpha'] },
  },
};

export function scenarioRequest(overrides: Partial<ScenarioRequest> = {}): ScenarioRequest {
  return {
    lambda: 0.05,
    budget: null,
    compliance_floors: {},
    context_weights: {},
    aggregation: 'average',
    selection_strategy: 'argmax',
    cost_normalization: 'raw',
    ...overrides,
  };
}

export function scenarioResponse(overrides: Partial<ScenarioResponse> = {}): ScenarioResponse {
  return {
    infeasible: false,
    feasible_models: ['alpha', 'bravo'],
    leaderboard: [
      { rank: 1, model_id: 'alpha', score: 0.91, feasible: true, cost_used: 1.2, utility_by_group: { g: 0.95 } },
      { rank: 2, model_id: 'bravo', score: 0.64, feasible: true, cost_used: 0.4, utility_by_group: { g: 0.66 } },
      { rank: null, model_id: 'charlie', score: 0.2, feasible: false, cost_used: 9.0, utility_by_group: { g: 0.65 } },
    ],
    recommendations: {
      g: {
        context: 'g',
        target_x: [0.3, 0.8],
        target_c: 2.5,
        target_utility: 0.79,
        target_objective: 0.665,
        selected_model: 'alpha',
        selected_x: [0.4, 0.9],
        selected_cost: 1.2,
        achieved_utility: 0.95,
        deployment_value: 0.89,
        binding: ['frontier'],
        infeasible: false,
        tier: 3,
      },
    },
    targets: {
      g: {
        x: [0.3, 0.8],
        cost: 2.5,
        utility: 0.79,
        objective: 0.665,
        binding: ['frontier', 'floor:C1'],
        solver: 'closed_form',
        regimes: ['floor', 'interior'],
      },
    },
    sensitivity: {
      g: {
        W_star: 0.31,
        Y_star: 0.26,
        Z_star: -0.1,
        Z_int_star: -0.08,
        budget_binding: true,
        eps_B: 0.25,
        dx_dB: [0, 0.004],
        spillovers: [[1, -0.2], [0, 0]],
        dc_dRk: [0, 0],
        eps_c: 1.2,
        eps_d: 4.3,
        eta_b: [0, -0.1],
        gamma: -0.3,
      },
    },
    ...overrides,
  };
}
