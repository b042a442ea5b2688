import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/client.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixturesDir = join(here, "..", "..", "fixtures");

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(fixturesDir, name), "utf-8")) as T;
}

export interface RecordedCall {
  method: string;
  url: string;
  body: unknown;
}

export interface Route {
  method: string;
  path: string;
  status?: number;
  /** response body, or a function of the Nth call to this route */
  reply: unknown | ((call: number) => unknown);
}

/** Fetch double that replays recorded service responses and logs requests. */
export function fakeFetch(routes: Route[]): { fetchFn: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const hits = new Map<Route, number>();
  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    calls.push({ method, url, body });
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const route = routes.find((r) => r.method === method && r.path === path);
    if (!route) {
      return new Response(JSON.stringify({ detail: `no route ${method} ${path}` }), {
        status: 404,
        headers: { "content-type": "application/json" },
      });
    }
    const n = hits.get(route) ?? 0;
    hits.set(route, n + 1);
    const payload = typeof route.reply === "function"
      ? (route.reply as (call: number) => unknown)(n)
      : route.reply;
    return new Response(JSON.stringify(payload), {
      status: route.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetchFn, calls };
}
