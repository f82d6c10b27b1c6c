/**
 * Wire types mirroring the selection service's JSON payloads.
 * Field names are snake_case exactly as served; the explorer never reshapes
 * or re-ranks what the service returns.
 */

export interface LeaderboardRow {
  rank: number | null;
  model_id: string;
  score: number;
  feasible: boolean;
  cost_used: number;
  utility_by_group: Record<string, number>;
}

export interface RecommendationPayload {
  context: string;
  target_x: number[] | null;
  target_c: number | null;
  target_utility: number | null;
  target_objective: number | null;
  selected_model: string | null;
  selected_x: number[] | null;
  selected_cost: number | null;
  achieved_utility: number | null;
  deployment_value: number | null;
  binding: string[];
  infeasible: boolean;
  tier: number | null;
  error?: string;
}

export interface TargetPayload {
  x: number[];
  cost: number;
  utility: number;
  objective: number;
  binding: string[];
  solver: string;
  regimes: string[] | null;
}

export interface SensitivityPayload {
  W_star: number;
  Y_star: number;
  Z_star: number;
  Z_int_star: number;
  budget_binding: boolean;
  eps_B: number | null;
  dx_dB: number[] | null;
  spillovers: (number | null)[][];
  dc_dRk: (number | null)[];
  eps_c: number | null;
  eps_d: number | null;
  eta_b: number[] | null;
  gamma: number | null;
}

export interface ScenarioResponse {
  infeasible: boolean;
  feasible_models: string[];
  leaderboard: LeaderboardRow[];
  recommendations: Record<string, RecommendationPayload>;
  targets: Record<string, TargetPayload | null>;
  sensitivity: Record<string, SensitivityPayload | null>;
}

export interface FrontierPayload {
  a: number[];
  b: number;
  c0: number;
  d: number;
  tier_levels: number[];
  tier_costs: number[];
  tier_structure: {
    tiers: Record<string, number>;
    efficient: Record<string, string[]>;
  };
}

export interface ModelsPayload {
  catalog: {
    capability_names: string[];
    cost_names: string[];
    models: { model_id: string; cost: number }[];
  };
  measures: { model_ids: string[]; measures: number[][] } | null;
}

export interface ScenarioRequest {
  lambda: number;
  budget: number | null;
  compliance_floors: Record<string, number>;
  context_weights: Record<string, number>;
  aggregation: 'per_type' | 'average' | 'robust';
  selection_strategy: 'argmax' | 'nearest';
  cost_normalization: 'raw' | 'minmax';
}
