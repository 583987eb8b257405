// Client-side validation for the norms editor. The server rejects bad
// values too (422); validating here keeps the feedback immediate and the
// wire clean.

export type NormsDraft = {
  lambda: string;
  weights: [string, string, string, string];
};

export type NormsValidation =
  | { ok: true; lambda: number; weights: [number, number, number, number] }
  | { ok: false; error: string };

export const WEIGHT_LABELS = ['d_hist', 'd_real', 'b_user', 'a_patterns'] as const;

const WEIGHT_SUM_TOL = 1e-9;

export function validateNorms(draft: NormsDraft): NormsValidation {
  const lambda = Number(draft.lambda);
  if (!Number.isFinite(lambda) || lambda < 0) {
    return { ok: false, error: 'lambda must be a finite number >= 0' };
  }
  const weights = draft.weights.map(Number) as [number, number, number, number];
  for (let i = 0; i < weights.length; i++) {
    if (!Number.isFinite(weights[i]) || weights[i] < 0 || weights[i] > 1) {
      return { ok: false, error: `weight ${WEIGHT_LABELS[i]} must be in [0, 1]` };
    }
  }
  const sum = weights.reduce((a, b) => a + b, 0);
  if (Math.abs(sum - 1) > WEIGHT_SUM_TOL) {
    return { ok: false, error: `weights must sum to 1, got ${sum}` };
  }
  return { ok: true, lambda, weights };
}
