import { describe, expect, it } from 'vitest';

import { normalizeScore } from '../src/normalize.js';
import vectors from './normalize-vectors.json';

describe('normalizeScore', () => {
  it('matches the server-generated vectors within 1e-9', () => {
    for (const { raw, normalized } of vectors as { raw: number; normalized: number }[]) {
      expect(Math.abs(normalizeScore(raw) - normalized)).toBeLessThanOrEqual(1e-9);
    }
  });

  it('anchors 0 -> 0 and 1 -> 5 exactly', () => {
    expect(normalizeScore(0)).toBe(0);
    expect(normalizeScore(1)).toBeCloseTo(5, 12);
  });

  it('is monotone and bounded below 10', () => {
    let prev = -1;
    for (let raw = 0; raw <= 60; raw += 0.5) {
      const score = normalizeScore(raw);
      expect(score).toBeGreaterThanOrEqual(prev);
      expect(score).toBeLessThan(10 + 1e-12);
      prev = score;
    }
  });

  it('rejects negative raw scores', () => {
    expect(() => normalizeScore(-0.1)).toThrow(RangeError);
    expect(() => normalizeScore(NaN)).toThrow(RangeError);
  });
});
