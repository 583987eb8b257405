// Typed client for the scenario service. Every call goes over HTTP; the
// console never reaches into engine internals.
async function request(path, init) {
    const r = await fetch(path, init);
    if (!r.ok) {
        let detail = `${r.status} ${r.statusText}`;
        try {
            const body = await r.json();
            if (body && typeof body.error === 'string')
                detail = body.error;
        }
        catch {
            // non-JSON error body; keep the status line
        }
        throw new Error(detail);
    }
    return r.json();
}
function post(path, payload) {
    return request(path, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(payload),
    });
}
export function createScenario(id, config) {
    return post('/scenarios', { id, config });
}
export function stepScenario(id, action) {
    return post(`/scenarios/${id}/step`, { action });
}
// Preview only: must never advance the tick. The server guarantees it; the
// client guarantees it by construction by never touching /step here.
export function whatIf(id, action) {
    return post(`/scenarios/${id}/whatif`, { action });
}
export function getState(id) {
    return request(`/scenarios/${id}/state`);
}
export function getAttribution(id) {
    return request(`/scenarios/${id}/attribution`);
}
export function getRecommendation(id) {
    return request(`/scenarios/${id}/recommendation`);
}
export function putNorms(id, norms) {
    return request(`/scenarios/${id}/norms`, {
        method: 'PUT',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({
            lambda: norms.lambda,
            perturbation_weights: norms.perturbation_weights,
        }),
    });
}
export async function getTrace(id) {
    const r = await fetch(`/scenarios/${id}/trace`);
    if (!r.ok)
        throw new Error(`${r.status} ${r.statusText}`);
    const text = await r.text();
    const records = [];
    for (const line of text.split('\n')) {
        if (!line.trim())
            continue;
        const doc = JSON.parse(line);
        if (doc.kind === 'record')
            records.push(doc);
    }
    return records;
}
