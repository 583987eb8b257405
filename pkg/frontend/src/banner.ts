// Regime banner. Collapse takes over the whole banner and must not leak a
// numeric score anywhere into the markup: the model has no number for a
// collapsed system and the console must not invent one.

import type { Output } from './api.js';
import { formatScore } from './normalize.js';

const REGIME_CLASS: Record<string, string> = {
  NORMAL: 'banner-normal',
  FRAGILE: 'banner-fragile',
};

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;');
}

export function renderBanner(output: Output, level: string): string {
  if (output.kind === 'collapse') {
    return [
      '<div class="banner banner-collapse" role="alert">',
      '<span class="banner-regime">COLLAPSE</span>',
      `<span class="banner-message">${escapeHtml(output.message)}</span>`,
      '</div>',
    ].join('');
  }
  const cls = REGIME_CLASS[output.regime] ?? 'banner-normal';
  return [
    `<div class="banner ${cls}">`,
    `<span class="banner-regime">${output.regime}</span>`,
    `<span class="banner-level">${level}</span>`,
    `<span class="banner-score">${formatScore(output.value)}</span>`,
    '</div>',
  ].join('');
}
