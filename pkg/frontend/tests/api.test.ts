import { afterEach, describe, expect, it, vi } from 'vitest';

import { getTrace, stepScenario, whatIf } from '../src/api.js';

type Call = { url: string; init?: RequestInit };

function mockFetch(body: unknown, contentType = 'application/json') {
  const calls: Call[] = [];
  const fn = vi.fn(async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return {
      ok: true,
      status: 200,
      statusText: 'OK',
      json: async () => body,
      text: async () => (typeof body === 'string' ? body : JSON.stringify(body)),
      headers: { get: () => contentType },
    } as unknown as Response;
  });
  vi.stubGlobal('fetch', fn);
  return calls;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe('whatIf', () => {
  it('never touches the step endpoint', async () => {
    const calls = mockFetch({
      action: 'harden',
      output: { kind: 'projection', value: 1.0, regime: 'NORMAL', sensitivity: 2.0,
                attribution: { threat_term: 0.9, perturbation_term: 0.1, source_contributions: [0.1, 0, 0, 0] } },
      reward: 0.2,
    });
    await whatIf('abc', 'harden');
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe('/scenarios/abc/whatif');
    expect(calls.some((c) => c.url.includes('/step'))).toBe(false);
  });
});

describe('stepScenario', () => {
  it('posts the action id to the step endpoint', async () => {
    const calls = mockFetch({ kind: 'record', tick: 1 });
    await stepScenario('abc', 'patch');
    expect(calls[0].url).toBe('/scenarios/abc/step');
    expect(calls[0].init?.method).toBe('POST');
    expect(JSON.parse(calls[0].init?.body as string)).toEqual({ action: 'patch' });
  });

  it('surfaces server error payloads', async () => {
    vi.stubGlobal('fetch', vi.fn(async () => ({
      ok: false,
      status: 422,
      statusText: 'Unprocessable Entity',
      json: async () => ({ error: "unknown action 'reboot'" }),
    }) as unknown as Response));
    await expect(stepScenario('abc', 'reboot')).rejects.toThrow("unknown action 'reboot'");
  });
});

describe('getTrace', () => {
  it('keeps record lines and drops header and norms lines', async () => {
    const lines = [
      '{"kind":"header","version":1}',
      '{"kind":"record","tick":0,"baseline":2.5,"action":null,"output":{"kind":"collapse","resilience":0.004,"message":"m"},"level":"CRITICAL"}',
      '{"kind":"norms","tick":0}',
      '{"kind":"record","tick":1,"baseline":2.5,"action":"harden","output":{"kind":"projection","value":1.2,"regime":"NORMAL"},"level":"LOW"}',
    ].join('\n');
    mockFetch(lines);
    const records = await getTrace('abc');
    expect(records.map((r) => r.tick)).toEqual([0, 1]);
    expect(records[0].output.kind).toBe('collapse');
  });
});
