/**
 * Frontier plot geometry: tier level curves in a chosen 2-D projection,
 * scatter points colored by tier, and the target-to-selection guide.
 * Curves are sliced through fixed values for the unplotted measures, so a
 * point on a drawn curve evaluates to its tier level under the served CES
 * parameters.
 */

import type { FrontierPayload } from './types';

export function cesScore(x: number[], a: number[], b: number): number {
  let mass = 0;
  for (let i = 0; i < a.length; i += 1) {
    mass += a[i] * Math.pow(Math.max(x[i], 0), b);
  }
  return Math.pow(mass, 1 / b);
}

export interface LevelCurve {
  tier: number;
  level: number;
  points: { x: number; y: number }[];
}

/**
 * Polyline for the level set {ces(x) = level} in the (dimX, dimY) plane,
 * holding the remaining coordinates at `slice` (zeros by default).
 */
export function levelCurve(
  frontier: FrontierPayload,
  level: number,
  dimX: number,
  dimY: number,
  slice?: number[],
  samples = 121,
): { x: number; y: number }[] {
  const { a, b } = frontier;
  if (dimX === dimY || dimX < 0 || dimY < 0 || dimX >= a.length || dimY >= a.length) {
    throw new Error(`dimension pair out of range: (${dimX}, ${dimY})`);
  }
  const rest = slice ?? new Array(a.length).fill(0);
  let restMass = 0;
  for (let k = 0; k < a.length; k += 1) {
    if (k !== dimX && k !== dimY) restMass += a[k] * Math.pow(Math.max(rest[k], 0), b);
  }
  const points: { x: number; y: number }[] = [];
  const budget = Math.pow(level, b) - restMass;
  if (budget <= 0) return points;
  for (let i = 0; i < samples; i += 1) {
    const x = i / (samples - 1);
    const remainder = budget - frontier.a[dimX] * Math.pow(x, b);
    if (remainder < 0) continue;
    const y = Math.pow(remainder / frontier.a[dimY], 1 / b);
    if (y <= 1 + 1e-9) points.push({ x, y: Math.min(y, 1) });
  }
  return points;
}

export function tierCurves(
  frontier: FrontierPayload,
  dimX: number,
  dimY: number,
  slice?: number[],
): LevelCurve[] {
  return frontier.tier_levels.map((level, i) => ({
    tier: i + 1,
    level,
    points: levelCurve(frontier, level, dimX, dimY, slice),
  }));
}

export interface ScatterPoint {
  modelId: string;
  x: number;
  y: number;
  tier: number;
  efficient: boolean;
}

export function scatterPoints(
  frontier: FrontierPayload,
  modelIds: string[],
  measures: number[][],
  dimX: number,
  dimY: number,
): ScatterPoint[] {
  const efficient = new Set<string>();
  for (const ids of Object.values(frontier.tier_structure.efficient)) {
    for (const id of ids) efficient.add(id);
  }
  return modelIds.map((modelId, i) => ({
    modelId,
    x: measures[i][dimX],
    y: measures[i][dimY],
    tier: frontier.tier_structure.tiers[modelId] ?? 0,
    efficient: efficient.has(modelId),
  }));
}

/** Weakest tier draws first and coolest; strongest last and warmest. */
export function tierColor(tier: number, tierCount: number): string {
  const t = tierCount <= 1 ? 1 : (tier - 1) / (tierCount - 1);
  const hue = 270 - 220 * t; // violet -> amber, weakest -> strongest
  return `hsl(${Math.round(hue)}, 70%, 55%)`;
}

export interface Guide {
  from: { x: number; y: number };
  to: { x: number; y: number };
}

export function targetGuide(
  target: number[] | null,
  selected: number[] | null,
  dimX: number,
  dimY: number,
): Guide | null {
  if (!target || !selected) return null;
  return {
    from: { x: target[dimX], y: target[dimY] },
    to: { x: selected[dimX], y: selected[dimY] },
  };
}
