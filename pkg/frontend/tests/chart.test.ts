import { describe, expect, it } from 'vitest';

import type { StepRecord } from '../src/api.js';
import { toTimeline, xScale, yScale } from '../src/chart.js';

function record(tick: number, output: StepRecord['output'], baseline = 2.5): StepRecord {
  return {
    kind: 'record',
    tick,
    pre_state: {} as StepRecord['pre_state'],
    action: null,
    output,
    baseline,
    level: 'LOW',
    reward: null,
    divergence: null,
  };
}

describe('toTimeline', () => {
  it('normalizes projection values and nulls out collapse ticks', () => {
    const points = toTimeline([
      record(0, { kind: 'projection', value: 1.0, regime: 'NORMAL', sensitivity: 1, attribution: { threat_term: 1, perturbation_term: 0, source_contributions: [0, 0, 0, 0] } }),
      record(1, { kind: 'collapse', resilience: 0.004, message: 'm' }),
    ]);
    expect(points[0].score).toBeCloseTo(5.0, 12);
    expect(points[0].collapsed).toBe(false);
    expect(points[1].score).toBeNull();
    expect(points[1].collapsed).toBe(true);
  });
});

describe('scales', () => {
  it('maps the tick range onto [0, width]', () => {
    expect(xScale(0, 0, 10, 500)).toBe(0);
    expect(xScale(10, 0, 10, 500)).toBe(500);
    expect(xScale(5, 0, 10, 500)).toBe(250);
  });

  it('centers a single-tick run', () => {
    expect(xScale(3, 3, 3, 500)).toBe(250);
  });

  it('maps score 0 to the bottom and 10 to the top', () => {
    expect(yScale(0, 200)).toBe(200);
    expect(yScale(10, 200)).toBe(0);
  });
});
