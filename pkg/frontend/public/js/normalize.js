// Display normalization: map a raw projection value in [0, inf) onto a
// bounded [0, 10) gauge. Anchors: 0 -> 0, 1 -> 5, asymptote 10. This must
// match the server's normalization exactly; the shared vector file in
// tests/ is generated server-side and checked here at 1e-9.
const LN2 = Math.LN2;
export function normalizeScore(raw) {
    if (!(raw >= 0)) {
        throw new RangeError(`raw score must be >= 0, got ${raw}`);
    }
    return 10 * (1 - Math.exp(-LN2 * raw));
}
export function formatScore(raw) {
    return normalizeScore(raw).toFixed(2);
}
