// Typed client for the scenario service. Every call goes over HTTP; the
// console never reaches into engine internals.

export type Regime = 'NORMAL' | 'FRAGILE' | 'COLLAPSE';

export type Sources = {
  d_hist: number;
  d_real: number;
  b_user: number;
  a_patterns: number;
};

export type WireState = {
  t: number;
  threat: number;
  vulnerability: number;
  exposure: number;
  resilience: number;
  sources: Sources;
};

export type Attribution = {
  threat_term: number;
  perturbation_term: number;
  source_contributions: number[];
};

// Collapse carries no numeric projection on the wire, only the resilience
// that triggered it and a fixed message. Keep the variants separate so the
// type system forbids reading .value off a collapse.
export type ProjectionOutput = {
  kind: 'projection';
  value: number;
  regime: Exclude<Regime, 'COLLAPSE'>;
  sensitivity: number;
  attribution: Attribution;
};

export type CollapseOutput = {
  kind: 'collapse';
  resilience: number;
  message: string;
};

export type Output = ProjectionOutput | CollapseOutput;

export type StepRecord = {
  kind: 'record';
  tick: number;
  pre_state: WireState;
  action: string | null;
  output: Output;
  baseline: number;
  level: 'LOW' | 'MEDIUM' | 'HIGH' | 'CRITICAL';
  reward: number | null;
  divergence: boolean | null;
};

export type StatePayload = {
  id: string;
  tick: number;
  state: WireState;
  hash: string;
  lambda: number;
  perturbation_weights: number[];
};

export type WhatIfResult = {
  action: string;
  output: Output;
  reward: number;
};

export type RecommendationPayload = {
  action: string;
  expected_reward: number;
  lambda: number;
  q_values: Record<string, number>;
};

export type NormsPayload = {
  lambda: number;
  perturbation_weights: number[];
};

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const r = await fetch(path, init);
  if (!r.ok) {
    let detail = `${r.status} ${r.statusText}`;
    try {
      const body = await r.json();
      if (body && typeof body.error === 'string') detail = body.error;
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new Error(detail);
  }
  return r.json();
}

function post<T>(path: string, payload: unknown): Promise<T> {
  return request<T>(path, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(payload),
  });
}

export function createScenario(id: string, config: unknown): Promise<{ id: string; tick: number }> {
  return post('/scenarios', { id, config });
}

export function stepScenario(id: string, action: string | null): Promise<StepRecord> {
  return post(`/scenarios/${id}/step`, { action });
}

// Preview only: must never advance the tick. The server guarantees it; the
// client guarantees it by construction by never touching /step here.
export function whatIf(id: string, action: string): Promise<WhatIfResult> {
  return post(`/scenarios/${id}/whatif`, { action });
}

export function getState(id: string): Promise<StatePayload> {
  return request(`/scenarios/${id}/state`);
}

export function getAttribution(id: string): Promise<Record<string, unknown>> {
  return request(`/scenarios/${id}/attribution`);
}

export function getRecommendation(id: string): Promise<RecommendationPayload> {
  return request(`/scenarios/${id}/recommendation`);
}

export function putNorms(id: string, norms: Partial<NormsPayload>): Promise<NormsPayload> {
  return request(`/scenarios/${id}/norms`, {
    method: 'PUT',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({
      lambda: norms.lambda,
      perturbation_weights: norms.perturbation_weights,
    }),
  });
}

export async function getTrace(id: string): Promise<StepRecord[]> {
  const r = await fetch(`/scenarios/${id}/trace`);
  if (!r.ok) throw new Error(`${r.status} ${r.statusText}`);
  const text = await r.text();
  const records: StepRecord[] = [];
  for (const line of text.split('\n')) {
    if (!line.trim()) continue;
    const doc = JSON.parse(line);
    if (doc.kind === 'record') records.push(doc as StepRecord);
  }
  return records;
}
