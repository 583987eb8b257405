// Console wiring: one scenario per page session, polled state, explicit
// step/what-if controls, and a norms editor. All model work happens on the
// server; this file only moves JSON and pixels.

import {
  createScenario,
  getAttribution,
  getRecommendation,
  getState,
  getTrace,
  putNorms,
  stepScenario,
  whatIf,
  type StepRecord,
  type WhatIfResult,
} from './api.js';
import { renderBanner } from './banner.js';
import { drawTimeline, toTimeline } from './chart.js';
import { validateNorms, WEIGHT_LABELS } from './norms.js';
import { formatScore } from './normalize.js';

const ACTIONS = ['observe', 'patch', 'harden', 'isolate'];
const POLL_MS = 4000;

const DEFAULT_CONFIG = {
  seed: 1,
  initial: {
    t: 0,
    threat: 0.4,
    vulnerability: 0.5,
    exposure: 0.6,
    resilience: 0.6,
    sources: { d_hist: 0.2, d_real: 0.3, b_user: 0.1, a_patterns: 0.4 },
  },
  resilience_decay: 0.01,
  noise_amplitude: 0.01,
  attack_rate: 0.1,
  attack_magnitude: 0.1,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let scenarioId = '';
let records: StepRecord[] = [];

function setStatus(text: string, isError = false): void {
  const status = el<HTMLElement>('status');
  status.textContent = text;
  status.className = isError ? 'status error' : 'status';
}

function renderLatest(): void {
  const canvas = el<HTMLCanvasElement>('timeline');
  drawTimeline(canvas, toTimeline(records));
  const last = records[records.length - 1];
  if (last) {
    el<HTMLElement>('banner-slot').innerHTML = renderBanner(last.output, last.level);
  }
}

async function refreshSidebar(): Promise<void> {
  const [state, attribution, recommendation] = await Promise.all([
    getState(scenarioId),
    getAttribution(scenarioId),
    getRecommendation(scenarioId),
  ]);
  el<HTMLElement>('tick').textContent = String(state.tick);
  el<HTMLElement>('state-json').textContent = JSON.stringify(state.state, null, 2);
  el<HTMLElement>('attribution-json').textContent = JSON.stringify(attribution, null, 2);
  el<HTMLElement>('recommendation').textContent =
    `${recommendation.action} (expected reward ${recommendation.expected_reward.toFixed(4)})`;
  el<HTMLInputElement>('norm-lambda').placeholder = String(state.lambda);
  state.perturbation_weights.forEach((w, i) => {
    el<HTMLInputElement>(`norm-w${i}`).placeholder = String(w);
  });
}

async function refreshAll(): Promise<void> {
  records = await getTrace(scenarioId);
  renderLatest();
  await refreshSidebar();
}

async function doStep(action: string | null): Promise<void> {
  const record = await stepScenario(scenarioId, action);
  records.push(record);
  renderLatest();
  await refreshSidebar();
  setStatus(`tick ${record.tick}: ${action ?? 'no action'}`);
}

function describePreview(result: WhatIfResult): string {
  if (result.output.kind === 'collapse') {
    return `${result.action}: still collapsed, reward ${result.reward.toFixed(4)}`;
  }
  return (
    `${result.action}: score ${formatScore(result.output.value)} ` +
    `(${result.output.regime}), reward ${result.reward.toFixed(4)}`
  );
}

async function doWhatIf(action: string): Promise<void> {
  const before = el<HTMLElement>('tick').textContent;
  const result = await whatIf(scenarioId, action);
  el<HTMLElement>('whatif-result').textContent = describePreview(result);
  // preview must not move the clock
  const state = await getState(scenarioId);
  if (String(state.tick) !== before) {
    setStatus('what-if unexpectedly advanced the scenario', true);
  }
}

async function submitNorms(): Promise<void> {
  const draft = {
    lambda: el<HTMLInputElement>('norm-lambda').value || el<HTMLInputElement>('norm-lambda').placeholder,
    weights: [0, 1, 2, 3].map((i) => {
      const input = el<HTMLInputElement>(`norm-w${i}`);
      return input.value || input.placeholder;
    }) as [string, string, string, string],
  };
  const checked = validateNorms(draft);
  if (!checked.ok) {
    setStatus(checked.error, true);
    return;
  }
  const applied = await putNorms(scenarioId, {
    lambda: checked.lambda,
    perturbation_weights: checked.weights,
  });
  setStatus(`norms applied: lambda ${applied.lambda}`);
  await refreshSidebar();
}

function buildControls(): void {
  const actionRow = el<HTMLElement>('actions');
  for (const action of [null, ...ACTIONS]) {
    const button = document.createElement('button');
    button.textContent = action ?? 'advance';
    button.onclick = () => doStep(action).catch((e) => setStatus(String(e), true));
    actionRow.appendChild(button);
  }
  const whatifRow = el<HTMLElement>('whatif-actions');
  for (const action of ACTIONS) {
    const button = document.createElement('button');
    button.textContent = `preview ${action}`;
    button.onclick = () => doWhatIf(action).catch((e) => setStatus(String(e), true));
    whatifRow.appendChild(button);
  }
  const weightRow = el<HTMLElement>('norm-weights');
  WEIGHT_LABELS.forEach((label, i) => {
    const wrap = document.createElement('label');
    wrap.textContent = label;
    const input = document.createElement('input');
    input.id = `norm-w${i}`;
    input.size = 6;
    wrap.appendChild(input);
    weightRow.appendChild(wrap);
  });
  el<HTMLElement>('norm-apply').onclick = () =>
    submitNorms().catch((e) => setStatus(String(e), true));
}

async function start(): Promise<void> {
  buildControls();
  scenarioId = `console${Date.now()}`;
  try {
    await createScenario(scenarioId, DEFAULT_CONFIG);
  } catch (e) {
    setStatus(`failed to create scenario: ${e}`, true);
    return;
  }
  setStatus(`scenario ${scenarioId} ready`);
  await refreshAll();
  setInterval(() => refreshAll().catch((e) => setStatus(String(e), true)), POLL_MS);
}

start().catch((e) => setStatus(String(e), true));
