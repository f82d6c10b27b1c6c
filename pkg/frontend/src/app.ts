/**
 * Browser entry point: wires the sliders to the debounced client and paints
 * the leaderboard, regime badges, sensitivity panel, and frontier plot from
 * each applied view. Exploration is read-only; all scoring happens serverside.
 */

import { ScenarioClient, type Transport } from './client';
import { scatterPoints, targetGuide, tierColor, tierCurves } from './frontier';
import {
  initialState, isValid, toScenarioRequest, withBudget, withFloor, withGroupWeight,
  withLambda, type FormRanges, type ScenarioFormState,
} from './state';
import type { FrontierPayload, ModelsPayload, ScenarioRequest } from './types';
import { buildView, type EvaluationView } from './view';

const $ = <T extends HTMLElement>(selector: string): T => {
  const el = document.querySelector<T>(selector);
  if (!el) throw new Error(`missing element ${selector}`);
  return el;
};

const fetchTransport: Transport = async (request: ScenarioRequest) => {
  const resp = await fetch('/scenario', {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(request),
  });
  return { status: resp.status, body: await resp.text() };
};

async function getJson<T>(path: string): Promise<T> {
  const resp = await fetch(path);
  if (!resp.ok) throw new Error(`${path} -> ${resp.status}`);
  return (await resp.json()) as T;
}

interface AppContext {
  frontier: FrontierPayload;
  models: ModelsPayload;
  ranges: FormRanges;
  state: ScenarioFormState;
  client: ScenarioClient;
  context: string;
  dims: [number, number];
}

function renderLeaderboard(view: EvaluationView): string {
  const rows = view.rows
    .map((row) => {
      const rank = row.rank === null ? '—' : String(row.rank);
      const cls = row.feasible ? '' : ' class="infeasible"';
      return `<tr${cls}><td>${rank}</td><td>${row.model_id}</td>` +
        `<td>${row.score.toFixed(3)}</td><td>${row.cost_used.toFixed(3)}</td></tr>`;
    })
    .join('');
  return `<table><thead><tr><th>#</th><th>model</th><th>score</th><th>cost</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`;
}

function renderBadges(view: EvaluationView): string {
  return view.regimes
    .map((b) => `<span class="badge badge-${b.regime}">${b.measure}: ${b.regime}</span>`)
    .join(' ');
}

function renderSensitivity(view: EvaluationView): string {
  if (!view.sensitivity) return '<em>closed-form sensitivities unavailable for this scenario</em>';
  const eps = view.sensitivity.budgetElasticity;
  const lines = [
    `budget elasticity: ${eps === null ? 'n/a (budget slack)' : eps.toFixed(4)}`,
    `curvature reallocation gamma: ${view.sensitivity.gamma?.toFixed(4) ?? 'n/a'}`,
  ];
  const dc = view.sensitivity.costResponses
    .map((v, k) => `dC*/dR${k + 1}=${v === null ? 'n/a' : v.toFixed(4)}`)
    .join('  ');
  return `${lines.join('<br>')}<br>${dc}`;
}

function drawFrontier(app: AppContext, view: EvaluationView): void {
  const canvas = $('#frontier-plot') as HTMLCanvasElement;
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const [dx, dy] = app.dims;
  const W = canvas.width;
  const H = canvas.height;
  const px = (x: number) => 30 + x * (W - 45);
  const py = (y: number) => H - 25 - y * (H - 40);
  ctx.clearRect(0, 0, W, H);
  ctx.strokeStyle = '#888';
  ctx.strokeRect(px(0), py(1), px(1) - px(0), py(0) - py(1));

  const tierCount = app.frontier.tier_levels.length;
  const slice = view.target ? view.target.x : undefined;
  for (const curve of tierCurves(app.frontier, dx, dy, slice)) {
    ctx.strokeStyle = tierColor(curve.tier, tierCount);
    ctx.beginPath();
    curve.points.forEach((p, i) => {
      if (i === 0) ctx.moveTo(px(p.x), py(p.y));
      else ctx.lineTo(px(p.x), py(p.y));
    });
    ctx.stroke();
  }

  const measures = app.models.measures;
  if (measures) {
    for (const pt of scatterPoints(app.frontier, measures.model_ids, measures.measures, dx, dy)) {
      ctx.fillStyle = tierColor(pt.tier, tierCount);
      ctx.beginPath();
      ctx.arc(px(pt.x), py(pt.y), pt.efficient ? 5 : 3, 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  const rec = view.infeasible ? null : app.client.view?.response.recommendations[app.context];
  const guide = targetGuide(view.target?.x ?? null, rec?.selected_x ?? null, dx, dy);
  if (view.target) {
    ctx.fillStyle = '#111';
    ctx.beginPath();
    ctx.arc(px(view.target.x[dx]), py(view.target.x[dy]), 6, 0, 2 * Math.PI);
    ctx.fill();
  }
  if (guide) {
    ctx.setLineDash([5, 4]);
    ctx.strokeStyle = '#111';
    ctx.beginPath();
    ctx.moveTo(px(guide.from.x), py(guide.from.y));
    ctx.lineTo(px(guide.to.x), py(guide.to.y));
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

function repaint(app: AppContext): void {
  const banner = $('#banner');
  const status = app.client.status;
  if (status.validationMessage) {
    banner.textContent = `invalid scenario: ${status.validationMessage}`;
    banner.className = 'banner warn';
  } else if (status.retryBanner) {
    banner.textContent = 'service unreachable — showing the last good view, retry by nudging a control';
    banner.className = 'banner warn';
  } else {
    banner.textContent = '';
    banner.className = 'banner';
  }
  const raw = app.client.view;
  if (!raw) return;
  const view = buildView(raw.response, app.context);
  $('#infeasible').style.display = view.infeasible ? 'block' : 'none';
  $('#leaderboard').innerHTML = renderLeaderboard(view);
  $('#badges').innerHTML = renderBadges(view);
  $('#sensitivity').innerHTML = renderSensitivity(view);
  $('#binding').textContent = view.binding.length ? `binding: ${view.binding.join(', ')}` : '';
  drawFrontier(app, view);
}

function submit(app: AppContext): void {
  if (!isValid(app.state)) return;
  app.client.apply(toScenarioRequest(app.state));
}

function buildControls(app: AppContext): void {
  const lambda = $('#lambda') as HTMLInputElement;
  lambda.max = String(app.ranges.lambdaMax);
  lambda.addEventListener('input', () => {
    app.state = withLambda(app.state, app.ranges, Number(lambda.value));
    $('#lambda-value').textContent = app.state.lambda.toFixed(2);
    submit(app);
  });

  const budget = $('#budget') as HTMLInputElement;
  budget.max = String(app.ranges.budgetMax);
  budget.addEventListener('input', () => {
    const v = Number(budget.value);
    app.state = withBudget(app.state, app.ranges, v >= app.ranges.budgetMax ? null : v);
    $('#budget-value').textContent = app.state.budget === null ? 'none' : app.state.budget.toFixed(2);
    submit(app);
  });

  const floorsBox = $('#floors');
  for (let i = 0; i < app.ranges.measureCount; i += 1) {
    const label = document.createElement('label');
    label.textContent = `floor C${i + 1} `;
    const slider = document.createElement('input');
    slider.type = 'range';
    slider.min = '0';
    slider.max = '0.99';
    slider.step = '0.01';
    slider.value = '0';
    slider.addEventListener('input', () => {
      app.state = withFloor(app.state, i, Number(slider.value));
      submit(app);
    });
    label.appendChild(slider);
    floorsBox.appendChild(label);
  }

  const aggregation = $('#aggregation') as HTMLSelectElement;
  aggregation.addEventListener('change', () => {
    app.state = { ...app.state, aggregation: aggregation.value as ScenarioFormState['aggregation'] };
    submit(app);
  });
  const strategy = $('#strategy') as HTMLSelectElement;
  strategy.addEventListener('change', () => {
    app.state = {
      ...app.state,
      selectionStrategy: strategy.value as ScenarioFormState['selectionStrategy'],
    };
    submit(app);
  });

  const contextPicker = $('#context') as HTMLSelectElement;
  for (const group of [...app.ranges.groups, 'aggregate']) {
    const option = document.createElement('option');
    option.value = group;
    option.textContent = group;
    contextPicker.appendChild(option);
  }
  contextPicker.addEventListener('change', () => {
    app.context = contextPicker.value;
    repaint(app);
  });

  const weightsBox = $('#weights');
  for (const group of app.ranges.groups) {
    const label = document.createElement('label');
    label.textContent = `${group} weight `;
    const input = document.createElement('input');
    input.type = 'number';
    input.min = '0';
    input.step = '0.1';
    input.value = '1';
    input.addEventListener('input', () => {
      app.state = withGroupWeight(app.state, group, Number(input.value));
      submit(app);
    });
    label.appendChild(input);
    weightsBox.appendChild(label);
  }
}

export async function start(): Promise<void> {
  const frontier = await getJson<FrontierPayload>('/frontier');
  const models = await getJson<ModelsPayload>('/models');
  const costs = models.catalog.models.map((m) => m.cost);
  const ranges: FormRanges = {
    lambdaMax: 1.0,
    budgetMax: Math.max(...costs) * 1.2,
    measureCount: frontier.a.length,
    groups: [], // filled from the first response's sensitivity keys
  };
  const probe = await fetchTransport({
    lambda: 0,
    budget: null,
    compliance_floors: {},
    context_weights: {},
    aggregation: 'average',
    selection_strategy: 'argmax',
    cost_normalization: 'raw',
  });
  const first = JSON.parse(probe.body);
  ranges.groups = Object.keys(first.sensitivity ?? {}).sort();

  const client = new ScenarioClient(fetchTransport);
  const app: AppContext = {
    frontier,
    models,
    ranges,
    state: initialState(ranges),
    client,
    context: ranges.groups[0] ?? 'aggregate',
    dims: [0, Math.min(1, frontier.a.length - 1)],
  };
  client.onChange(() => repaint(app));
  buildControls(app);
  submit(app);
}

if (typeof document !== 'undefined' && document.getElementById('explorer')) {
  void start();
}
