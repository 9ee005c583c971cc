/**
 * Fixture plumbing for the UI tests.
 *
 * The files under fixtures/ are byte-for-byte captures from the real
 * HTTP service over the synthetic corpus (see fixtures/generate.py).
 * FixtureServer replays them: GETs are answered by path, POSTs to the
 * search endpoint consume a caller-supplied queue of scenario names,
 * and every POST body is captured for assertions.
 */

import { readFileSync } from 'node:fs';
import type { Transport } from '../src/api.js';

export function fixtureText(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), 'utf8');
}

export function fixtureJson(name: string): unknown {
  return JSON.parse(fixtureText(name));
}

type Scenario = {
  method: string;
  path: string;
  status: number;
  response: string;
  request?: string;
};

export const scenarios = (fixtureJson('meta.json') as { scenarios: Record<string, Scenario> })
  .scenarios;

export type CapturedRequest = { path: string; body: unknown };

export class FixtureServer {
  readonly captured: CapturedRequest[] = [];
  private readonly queue: string[];

  constructor(postQueue: readonly string[] = []) {
    this.queue = [...postQueue];
  }

  readonly transport: Transport = async (path, init) => {
    const method = (init.method ?? 'GET').toUpperCase();
    if (method === 'GET') {
      const hit = Object.values(scenarios).find((s) => s.method === 'GET' && s.path === path);
      if (!hit) {
        return new Response('{"error":{"code":"not_found","message":"no such fixture"}}', {
          status: 404,
        });
      }
      return new Response(fixtureText(hit.response), { status: hit.status });
    }
    this.captured.push({ path, body: init.body === undefined ? null : JSON.parse(String(init.body)) });
    const name = this.queue.shift();
    if (name === undefined) throw new Error(`no queued fixture for ${method} ${path}`);
    const hit = scenarios[name];
    if (hit === undefined) throw new Error(`unknown fixture scenario ${name}`);
    return new Response(fixtureText(hit.response), { status: hit.status });
  };
}

/** A transport that never reaches a service. */
export const unreachableTransport: Transport = async () => {
  throw new TypeError('fetch failed');
};
