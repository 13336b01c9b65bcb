import fs from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";

const here = path.dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(fs.readFileSync(path.join(here, "fixtures", name), "utf-8")) as T;
}

export interface FetchCall {
  url: string;
  method: string;
  body: unknown;
}

export interface MockRule {
  method: string;
  match: (url: string) => boolean;
  status?: number;
  payload: unknown | ((body: unknown) => unknown);
}

export function installFetchMock(rules: MockRule[]): FetchCall[] {
  const calls: FetchCall[] = [];
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = (init?.method ?? "GET").toUpperCase();
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    calls.push({ url, method, body });
    for (const rule of rules) {
      if (rule.method === method && rule.match(url)) {
        const payload =
          typeof rule.payload === "function" ? (rule.payload as (b: unknown) => unknown)(body) : rule.payload;
        return new Response(JSON.stringify(payload), {
          status: rule.status ?? 200,
          headers: { "content-type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ detail: `no mock for ${method} ${url}` }), {
      status: 404,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;
  return calls;
}

export function appDom(): void {
  document.body.innerHTML = `
    <div id="banner"></div>
    <select id="period-select"></select>
    <input id="cutoff-input" type="number" value="0">
    <div id="route-browser"></div>
    <div id="route-map"></div>
    <div id="comparison"></div>
    <div id="whatif"></div>
    <div id="distribution"></div>
    <div id="embedding"></div>
  `;
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
