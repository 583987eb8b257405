// Timeline chart drawn on a plain canvas: normalized score per tick, the
// static baseline for contrast, and a marker band wherever the run is in
// collapse. Layout math is kept in pure helpers so it can be unit tested
// without a DOM.
import { normalizeScore } from './normalize.js';
export function toTimeline(records) {
    return records.map((r) => ({
        tick: r.tick,
        score: r.output.kind === 'collapse' ? null : normalizeScore(r.output.value),
        baseline: r.baseline,
        collapsed: r.output.kind === 'collapse',
        action: r.action,
    }));
}
export function xScale(tick, minTick, maxTick, width) {
    if (maxTick === minTick)
        return width / 2;
    return ((tick - minTick) / (maxTick - minTick)) * width;
}
export function yScale(score, height) {
    // fixed [0, 10] axis; the gauge never leaves it
    return height - (score / 10) * height;
}
const PAD = 28;
export function drawTimeline(canvas, points) {
    const ctx = canvas.getContext('2d');
    if (!ctx || points.length === 0)
        return;
    const w = canvas.width - 2 * PAD;
    const h = canvas.height - 2 * PAD;
    const minTick = points[0].tick;
    const maxTick = points[points.length - 1].tick;
    const px = (t) => PAD + xScale(t, minTick, maxTick, w);
    const py = (s) => PAD + yScale(s, h);
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    // axis frame and gridlines at 2.5 / 5 / 7.5 (the level cut points)
    ctx.strokeStyle = '#444';
    ctx.strokeRect(PAD, PAD, w, h);
    ctx.strokeStyle = '#2a2a2a';
    ctx.fillStyle = '#888';
    ctx.font = '10px sans-serif';
    for (const cut of [2.5, 5, 7.5]) {
        ctx.beginPath();
        ctx.moveTo(PAD, py(cut));
        ctx.lineTo(PAD + w, py(cut));
        ctx.stroke();
        ctx.fillText(cut.toFixed(1), 4, py(cut) + 3);
    }
    // collapse band behind everything else
    ctx.fillStyle = 'rgba(200, 40, 40, 0.25)';
    for (const p of points) {
        if (p.collapsed) {
            const half = maxTick > minTick ? w / (maxTick - minTick) / 2 : w / 2;
            ctx.fillRect(px(p.tick) - half, PAD, half * 2, h);
        }
    }
    // static baseline
    ctx.strokeStyle = '#7a7a7a';
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    points.forEach((p, i) => {
        const x = px(p.tick);
        const y = py(Math.min(p.baseline, 10));
        if (i === 0)
            ctx.moveTo(x, y);
        else
            ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.setLineDash([]);
    // normalized score, broken across collapse gaps
    ctx.strokeStyle = '#4ea1ff';
    ctx.lineWidth = 2;
    ctx.beginPath();
    let pen = false;
    for (const p of points) {
        if (p.score === null) {
            pen = false;
            continue;
        }
        const x = px(p.tick);
        const y = py(p.score);
        if (pen)
            ctx.lineTo(x, y);
        else
            ctx.moveTo(x, y);
        pen = true;
    }
    ctx.stroke();
    ctx.lineWidth = 1;
    // action markers
    ctx.fillStyle = '#ffd24e';
    for (const p of points) {
        if (p.action && p.score !== null) {
            ctx.beginPath();
            ctx.arc(px(p.tick), py(p.score), 3, 0, 2 * Math.PI);
            ctx.fill();
        }
    }
}
