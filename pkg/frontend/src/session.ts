/**
 * Single-tab search session: one form, at most one in-flight request,
 * last response and last error. Failures never touch the form, so the
 * operator's selections survive a dead service or a rejected query.
 */

import {
  ApiClient,
  ApiError,
  type PresetInfo,
  type Region,
  type SearchResponse,
  type TextureClass,
} from './api.js';
import {
  canSubmit,
  clearTerm,
  emptyForm,
  setColor,
  setPreset,
  setTexture,
  setTopK,
  toSearchRequest,
  type ColorChoice,
  type QueryFormState,
} from './form.js';
import { renderApp } from './render.js';

export type SessionError = { code: string; message: string };

export class SearchSession {
  private readonly client: ApiClient;

  form: QueryFormState;
  presets: readonly PresetInfo[] = [];
  response: SearchResponse | null = null;
  error: SessionError | null = null;
  busy = false;
  thumbnails: Record<string, string> = {};

  constructor(client: ApiClient, defaultPreset = 'table3_2_row11') {
    this.client = client;
    this.form = emptyForm(defaultPreset);
  }

  /** Load the preset list and point the form at the service default. */
  async start(): Promise<void> {
    try {
      const list = await this.client.presets();
      this.presets = list.presets;
      this.form = setPreset(this.form, list.default);
      this.error = null;
    } catch (err) {
      this.error = toSessionError(err);
    }
  }

  canSubmit(): boolean {
    return canSubmit(this.form) && !this.busy;
  }

  /**
   * Submit the current form. No-op when the form is empty or a search
   * is already in flight; on failure the form and the previous results
   * stay exactly as they were.
   */
  async submit(): Promise<void> {
    if (!this.canSubmit()) return;
    const request = toSearchRequest(this.form);
    this.busy = true;
    try {
      const response = await this.client.searchDescription(request);
      this.response = response;
      this.error = null;
      this.pruneThumbnails(response);
    } catch (err) {
      this.error = toSessionError(err);
    } finally {
      this.busy = false;
    }
  }

  /** Fetch thumbnails for the current results; misses are tolerated. */
  async loadThumbnails(): Promise<void> {
    if (!this.response) return;
    for (const r of this.response.results) {
      if (this.thumbnails[r.image_id] !== undefined) continue;
      try {
        const item = await this.client.item(r.image_id);
        if (item.thumbnail_png_base64) {
          this.thumbnails[r.image_id] = `data:image/png;base64,${item.thumbnail_png_base64}`;
        }
      } catch {
        // a card without a thumbnail is still a useful card
      }
    }
  }

  private pruneThumbnails(response: SearchResponse): void {
    const keep = new Set(response.results.map((r) => r.image_id));
    for (const id of Object.keys(this.thumbnails)) {
      if (!keep.has(id)) delete this.thumbnails[id];
    }
  }

  setColor(region: Region, color: ColorChoice): void {
    this.form = setColor(this.form, region, color);
  }

  setTexture(region: Region, texture: TextureClass | null): void {
    this.form = setTexture(this.form, region, texture);
  }

  clearTerm(region: Region): void {
    this.form = clearTerm(this.form, region);
  }

  setPreset(preset: string): void {
    this.form = setPreset(this.form, preset);
  }

  setTopK(topK: number): void {
    this.form = setTopK(this.form, topK);
  }

  render(): string {
    return renderApp({
      form: this.form,
      presets: this.presets,
      response: this.response,
      error: this.error,
      busy: this.busy,
      thumbnails: this.thumbnails,
    });
  }
}

function toSessionError(err: unknown): SessionError {
  if (err instanceof ApiError) return { code: err.code, message: err.message };
  if (err instanceof Error) return { code: 'client_error', message: err.message };
  return { code: 'client_error', message: String(err) };
}
