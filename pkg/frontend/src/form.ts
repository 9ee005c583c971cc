/**
 * Query form state and its two hard rules: nothing is submittable
 * until at least one region term is set, and texture can only be
 * attached to upper clothes.
 *
 * The state is immutable; every edit returns a new form so the app can
 * keep the previous one around (error paths restore it untouched).
 */

import {
  MAX_TOP_K,
  SEARCHABLE_REGIONS,
  SearchRequestSchema,
  type Region,
  type RegionTerm,
  type SearchRequest,
  type TextureClass,
} from './api.js';

/** Names accepted by the service's packaged color table. */
export const NAMED_COLORS = [
  'black',
  'blue',
  'cyan',
  'gray',
  'green',
  'lime',
  'magenta',
  'maroon',
  'navy',
  'olive',
  'purple',
  'red',
  'silver',
  'teal',
  'white',
  'yellow',
] as const;

export type ColorChoice =
  | { kind: 'none' }
  | { kind: 'named'; name: string }
  | { kind: 'explicit'; lab: [number, number, number] };

export type RegionFormTerm = {
  color: ColorChoice;
  texture: TextureClass | null;
};

export type QueryFormState = {
  terms: Readonly<Record<Region, RegionFormTerm>>;
  preset: string;
  topK: number;
};

const NO_TERM: RegionFormTerm = { color: { kind: 'none' }, texture: null };

export function emptyForm(preset: string, topK = 10): QueryFormState {
  const terms = {} as Record<Region, RegionFormTerm>;
  for (const region of SEARCHABLE_REGIONS) terms[region] = NO_TERM;
  return { terms, preset, topK };
}

export function textureAllowed(region: Region): boolean {
  return region === 'upper_clothes';
}

function termIsSet(term: RegionFormTerm): boolean {
  return term.color.kind !== 'none' || term.texture !== null;
}

export function canSubmit(form: QueryFormState): boolean {
  return SEARCHABLE_REGIONS.some((region) => termIsSet(form.terms[region]));
}

function withTerm(form: QueryFormState, region: Region, term: RegionFormTerm): QueryFormState {
  return { ...form, terms: { ...form.terms, [region]: term } };
}

export function setColor(form: QueryFormState, region: Region, color: ColorChoice): QueryFormState {
  return withTerm(form, region, { ...form.terms[region], color });
}

export function setTexture(
  form: QueryFormState,
  region: Region,
  texture: TextureClass | null,
): QueryFormState {
  if (texture !== null && !textureAllowed(region)) {
    throw new Error(`texture can only be described for upper clothes, not ${region}`);
  }
  return withTerm(form, region, { ...form.terms[region], texture });
}

export function clearTerm(form: QueryFormState, region: Region): QueryFormState {
  return withTerm(form, region, NO_TERM);
}

export function setPreset(form: QueryFormState, preset: string): QueryFormState {
  return { ...form, preset };
}

export function setTopK(form: QueryFormState, topK: number): QueryFormState {
  if (!Number.isInteger(topK) || topK < 1 || topK > MAX_TOP_K) {
    throw new Error(`top_k must be an integer in [1, ${MAX_TOP_K}], got ${topK}`);
  }
  return { ...form, topK };
}

/**
 * Serialize the set terms into the documented request shape, in the
 * fixed region order. The result is schema-checked so an invalid form
 * can never leave this function.
 */
export function toSearchRequest(form: QueryFormState): SearchRequest {
  const regions: RegionTerm[] = [];
  for (const region of SEARCHABLE_REGIONS) {
    const term = form.terms[region];
    if (!termIsSet(term)) continue;
    const doc: RegionTerm = { region };
    if (term.color.kind === 'named') doc.color = term.color.name;
    else if (term.color.kind === 'explicit') doc.color = term.color.lab;
    if (term.texture !== null) doc.texture = term.texture;
    regions.push(doc);
  }
  return SearchRequestSchema.parse({ regions, top_k: form.topK, preset: form.preset });
}
