/**
 * View model assembly: the served payload mapped 1:1 into what each panel
 * shows. Ranking order and scores pass through untouched.
 */

import type { ScenarioResponse, LeaderboardRow, SensitivityPayload } from './types';

export interface RegimeBadge {
  measure: string;
  regime: 'floor' | 'interior' | 'ceiling' | 'unknown';
}

export interface SensitivityPanel {
  budgetElasticity: number | null;
  spillovers: (number | null)[][];
  costResponses: (number | null)[];
  gamma: number | null;
}

export interface EvaluationView {
  rows: LeaderboardRow[];
  rowsRaw: string; // serialized exactly as served, for divergence checks
  target: { x: number[]; cost: number } | null;
  regimes: RegimeBadge[];
  sensitivity: SensitivityPanel | null;
  infeasible: boolean;
  binding: string[];
}

export function buildView(response: ScenarioResponse, context: string): EvaluationView {
  const target = response.targets[context] ?? null;
  const sensitivity = response.sensitivity[context] ?? null;
  const rec = response.recommendations[context];
  return {
    rows: response.leaderboard,
    rowsRaw: JSON.stringify(response.leaderboard),
    target: target ? { x: target.x, cost: target.cost } : null,
    regimes: buildRegimes(target?.regimes ?? null, target?.x.length ?? 0),
    sensitivity: sensitivity ? buildSensitivity(sensitivity) : null,
    infeasible: response.infeasible || (rec ? rec.infeasible : false),
    binding: target?.binding ?? rec?.binding ?? [],
  };
}

function buildRegimes(regimes: string[] | null, count: number): RegimeBadge[] {
  const badges: RegimeBadge[] = [];
  for (let i = 0; i < count; i += 1) {
    const raw = regimes?.[i];
    const regime =
      raw === 'floor' || raw === 'interior' || raw === 'ceiling' ? raw : 'unknown';
    badges.push({ measure: `C${i + 1}`, regime });
  }
  return badges;
}

function buildSensitivity(payload: SensitivityPayload): SensitivityPanel {
  return {
    budgetElasticity: payload.eps_B,
    spillovers: payload.spillovers,
    costResponses: payload.dc_dRk,
    gamma: payload.gamma,
  };
}
