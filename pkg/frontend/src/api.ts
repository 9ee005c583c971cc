/**
 * Typed client for the labreid search service.
 *
 * Every request body is validated against the schema before it leaves
 * the browser and every response body is validated after it arrives,
 * so the rest of the app only ever sees well-formed values. Scores are
 * carried through as the exact numbers the service sent; no rounding
 * happens on this side of the wire.
 */

import { z } from 'zod';

export const SEARCHABLE_REGIONS = [
  'upper_clothes',
  'pants',
  'hair',
  'gloves_boots',
  'legs',
] as const;

export const TEXTURE_CLASSES = [
  'uniform',
  'horizontal_lines',
  'vertical_lines',
  'checkered',
  'dots',
] as const;

export type Region = (typeof SEARCHABLE_REGIONS)[number];
export type TextureClass = (typeof TEXTURE_CLASSES)[number];

export const MAX_TOP_K = 500;

const LabTripleSchema = z.tuple([z.number(), z.number(), z.number()]);

const RegionTermSchema = z
  .object({
    region: z.enum(SEARCHABLE_REGIONS),
    color: z.union([z.string().min(1), LabTripleSchema]).optional(),
    texture: z.enum(TEXTURE_CLASSES).optional(),
  })
  .refine((t) => t.color !== undefined || t.texture !== undefined, {
    message: 'a region term needs a color or a texture',
  })
  .refine((t) => t.texture === undefined || t.region === 'upper_clothes', {
    message: 'texture can only be described for upper clothes',
  });

export const SearchRequestSchema = z
  .object({
    regions: z.array(RegionTermSchema).min(1),
    top_k: z.number().int().min(1).max(MAX_TOP_K),
    preset: z.string().min(1),
  })
  .superRefine((req, ctx) => {
    const seen = new Set<string>();
    for (const term of req.regions) {
      if (seen.has(term.region)) {
        ctx.addIssue({ code: 'custom', message: `region ${term.region} described twice` });
      }
      seen.add(term.region);
    }
  });

export type SearchRequest = z.infer<typeof SearchRequestSchema>;
export type RegionTerm = SearchRequest['regions'][number];

export const RankedResultSchema = z.object({
  image_id: z.string(),
  score: z.number(),
  used_regions: z.array(z.string()),
  breakdown: z.record(z.string(), z.number()),
});

export const SearchResponseSchema = z.object({
  results: z.array(RankedResultSchema),
  max_score: z.number(),
  query_regions: z.array(z.string()),
  preset: z.string(),
});

export type RankedResult = z.infer<typeof RankedResultSchema>;
export type SearchResponse = z.infer<typeof SearchResponseSchema>;

export const PresetSchema = z.object({
  name: z.string(),
  channel_weights: z.object({
    L: z.number(),
    a: z.number(),
    b: z.number(),
    d: z.number(),
    t: z.number(),
  }),
  class_weights: z.record(z.string(), z.number()),
  smoothing: z.object({
    filter_length: z.number().int(),
    before_compression: z.boolean(),
  }),
});

export const PresetListSchema = z.object({
  presets: z.array(PresetSchema),
  default: z.string(),
});

export type PresetInfo = z.infer<typeof PresetSchema>;
export type PresetList = z.infer<typeof PresetListSchema>;

export const HealthSchema = z.object({
  status: z.string(),
  fingerprint: z.string(),
  encoder_version: z.string(),
  record_count: z.number().int(),
});

export type Health = z.infer<typeof HealthSchema>;

const RegionSummarySchema = z.object({
  representative_color: z.object({ L: z.number(), a: z.number(), b: z.number() }).optional(),
  histogram_bits: z.object({ L: z.number(), a: z.number(), b: z.number() }).optional(),
  texture: z.object({ x: z.number(), y: z.number(), nearest_class: z.string() }).optional(),
});

export const ItemDetailSchema = z.object({
  image_id: z.string(),
  regions: z.record(z.string(), RegionSummarySchema),
  thumbnail_png_base64: z.string().nullable(),
});

export type ItemDetail = z.infer<typeof ItemDetailSchema>;

const ErrorEnvelopeSchema = z.object({
  error: z.object({ code: z.string(), message: z.string() }),
});

/** Anything the service (or the network) refused, with its machine code. */
export class ApiError extends Error {
  readonly code: string;
  /** HTTP status, or null when the request never reached the service. */
  readonly status: number | null;

  constructor(code: string, message: string, status: number | null) {
    super(message);
    this.name = 'ApiError';
    this.code = code;
    this.status = status;
  }
}

export type Transport = (path: string, init: RequestInit) => Promise<Response>;

function describeFailure(err: unknown): string {
  if (err instanceof Error && err.message) return err.message;
  return String(err);
}

export class ApiClient {
  private readonly transport: Transport;
  private readonly base: string;

  constructor(transport: Transport, base = '') {
    this.transport = transport;
    this.base = base;
  }

  private async requestJson(path: string, init: RequestInit): Promise<unknown> {
    let resp: Response;
    try {
      resp = await this.transport(this.base + path, init);
    } catch (err) {
      throw new ApiError('unreachable', describeFailure(err), null);
    }
    const text = await resp.text();
    if (!resp.ok) {
      const envelope = ErrorEnvelopeSchema.safeParse(tryParse(text));
      if (envelope.success) {
        throw new ApiError(envelope.data.error.code, envelope.data.error.message, resp.status);
      }
      throw new ApiError(`http_${resp.status}`, text.slice(0, 200), resp.status);
    }
    const doc = tryParse(text);
    if (doc === undefined) {
      throw new ApiError('bad_payload', 'service returned a non-JSON body', resp.status);
    }
    return doc;
  }

  private async get<T>(path: string, schema: z.ZodType<T>): Promise<T> {
    return this.parse(schema, await this.requestJson(path, { method: 'GET' }));
  }

  private parse<T>(schema: z.ZodType<T>, doc: unknown): T {
    const out = schema.safeParse(doc);
    if (!out.success) {
      throw new ApiError('bad_payload', out.error.issues[0]?.message ?? 'malformed response', null);
    }
    return out.data;
  }

  health(): Promise<Health> {
    return this.get('/health', HealthSchema);
  }

  presets(): Promise<PresetList> {
    return this.get('/presets', PresetListSchema);
  }

  item(imageId: string): Promise<ItemDetail> {
    return this.get(`/items/${encodeURIComponent(imageId)}`, ItemDetailSchema);
  }

  async searchDescription(request: SearchRequest): Promise<SearchResponse> {
    const body = SearchRequestSchema.parse(request);
    const doc = await this.requestJson('/search/description', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    return this.parse(SearchResponseSchema, doc);
  }
}

function tryParse(text: string): unknown {
  try {
    return JSON.parse(text);
  } catch {
    return undefined;
  }
}
