/**
 * HTML string views. Pure functions of state, no DOM access, so the
 * exact rendered text can be asserted in tests.
 */

import {
  SEARCHABLE_REGIONS,
  TEXTURE_CLASSES,
  type PresetInfo,
  type RankedResult,
  type Region,
  type SearchResponse,
} from './api.js';
import { NAMED_COLORS, canSubmit, textureAllowed, type QueryFormState } from './form.js';

export function escapeHtml(s: string): string {
  return s
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;')
    .replaceAll("'", '&#39;');
}

/**
 * Display form of a score: the shortest string that reads back as the
 * same number. This is the payload's own value, never re-rounded; an
 * integral maximum like 8 renders as "8".
 */
export function formatScore(n: number): string {
  return String(n);
}

function regionLabel(region: string): string {
  return region.replaceAll('_', ' ');
}

function renderBreakdown(r: RankedResult): string {
  const rows = r.used_regions
    .map((region) => {
      const value = r.breakdown[region];
      if (value === undefined) return '';
      return `<li><span class="region">${escapeHtml(regionLabel(region))}</span> <span class="value">${formatScore(value)}</span></li>`;
    })
    .join('');
  return `<ul class="breakdown">${rows}</ul>`;
}

export function renderResultCard(
  r: RankedResult,
  maxScore: number,
  rank: number,
  thumbnail?: string,
): string {
  const id = escapeHtml(r.image_id);
  const img = thumbnail
    ? `<img class="thumb" alt="${id}" src="${escapeHtml(thumbnail)}">`
    : `<div class="thumb placeholder" role="img" aria-label="${id}"></div>`;
  return [
    `<figure class="result-card" data-image-id="${id}">`,
    img,
    '<figcaption>',
    `<span class="rank">${rank}</span> <span class="image-id">${id}</span>`,
    `<strong class="score-badge">${formatScore(r.score)} out of ${formatScore(maxScore)}</strong>`,
    renderBreakdown(r),
    '</figcaption>',
    '</figure>',
  ].join('');
}

export function renderResultGrid(
  resp: SearchResponse,
  thumbnails: Readonly<Record<string, string>> = {},
): string {
  const cards = resp.results
    .map((r, i) => renderResultCard(r, resp.max_score, i + 1, thumbnails[r.image_id]))
    .join('\n');
  const regions = resp.query_regions.map(regionLabel).map(escapeHtml).join(', ');
  return [
    '<section class="results">',
    `<h2 class="grid-title">${resp.results.length} results, scored out of ${formatScore(resp.max_score)}</h2>`,
    `<p class="grid-meta">query regions: ${regions}; preset ${escapeHtml(resp.preset)}</p>`,
    `<div class="grid">${cards}</div>`,
    '</section>',
  ].join('\n');
}

export function renderErrorBanner(error: { code: string; message: string }): string {
  return [
    '<div class="error-banner" role="alert">',
    `<strong class="error-code">${escapeHtml(error.code)}</strong>`,
    `<span class="error-message">${escapeHtml(error.message)}</span>`,
    '<button type="button" data-action="retry">retry</button>',
    '</div>',
  ].join(' ');
}

function colorOptions(selected: { kind: string; name?: string }): string {
  const none = `<option value="" ${selected.kind === 'none' ? 'selected' : ''}>no color</option>`;
  const named = NAMED_COLORS.map(
    (name) =>
      `<option value="${name}" ${selected.kind === 'named' && selected.name === name ? 'selected' : ''}>${name}</option>`,
  ).join('');
  const custom = `<option value="custom:" ${selected.kind === 'explicit' ? 'selected' : ''}>picked color</option>`;
  return none + named + custom;
}

function renderRegionRow(form: QueryFormState, region: Region): string {
  const term = form.terms[region];
  const color = term.color;
  const labNote =
    color.kind === 'explicit'
      ? `<span class="lab-preview">Lab ${color.lab.map(formatScore).join(', ')}</span>`
      : '';
  const texture = textureAllowed(region)
    ? `<select data-texture="${region}" aria-label="texture for ${regionLabel(region)}">` +
      `<option value="" ${term.texture === null ? 'selected' : ''}>no texture</option>` +
      TEXTURE_CLASSES.map(
        (t) =>
          `<option value="${t}" ${term.texture === t ? 'selected' : ''}>${regionLabel(t)}</option>`,
      ).join('') +
      '</select>'
    : '';
  return [
    `<fieldset class="region-row" data-region="${region}">`,
    `<legend>${escapeHtml(regionLabel(region))}</legend>`,
    `<select data-color-select="${region}" aria-label="color for ${regionLabel(region)}">${colorOptions(color)}</select>`,
    `<input type="color" data-color-picker="${region}" aria-label="pick a color for ${regionLabel(region)}">`,
    labNote,
    texture,
    `<button type="button" data-action="clear" data-region="${region}">clear</button>`,
    '</fieldset>',
  ].join('');
}

export function renderForm(
  form: QueryFormState,
  presets: readonly PresetInfo[],
  busy: boolean,
): string {
  const rows = SEARCHABLE_REGIONS.map((region) => renderRegionRow(form, region)).join('\n');
  const presetOptions = presets
    .map(
      (p) =>
        `<option value="${escapeHtml(p.name)}" ${p.name === form.preset ? 'selected' : ''}>${escapeHtml(p.name)}</option>`,
    )
    .join('');
  const disabled = busy || !canSubmit(form) ? 'disabled' : '';
  return [
    '<form class="query-form" data-role="query-form">',
    rows,
    '<div class="controls">',
    `<label>preset <select data-preset>${presetOptions}</select></label>`,
    `<label>top k <input type="number" data-topk min="1" max="500" value="${form.topK}"></label>`,
    `<button type="submit" data-action="submit" ${disabled}>search</button>`,
    '</div>',
    '</form>',
  ].join('\n');
}

export type ViewState = {
  form: QueryFormState;
  presets: readonly PresetInfo[];
  response: SearchResponse | null;
  error: { code: string; message: string } | null;
  busy: boolean;
  thumbnails: Readonly<Record<string, string>>;
};

export function renderApp(state: ViewState): string {
  const parts = ['<main class="app">', '<h1>labreid search</h1>'];
  parts.push(renderForm(state.form, state.presets, state.busy));
  if (state.error) parts.push(renderErrorBanner(state.error));
  if (state.response) parts.push(renderResultGrid(state.response, state.thumbnails));
  parts.push('</main>');
  return parts.join('\n');
}
