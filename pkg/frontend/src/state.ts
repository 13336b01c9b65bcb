// View state and its URL-hash encoding: reloading any URL reproduces the
// same view, so the UI stays stateless with respect to the backend.

import { PERIODS, Period, RoutesResponse } from "./api.js";

export interface ViewState {
  period: Period;
  cutoff: number; // percent, always within [0, 100]
  routeId: string | null;
  // What-if stack: interior stop indices removed so far, applied in order
  // against the route's current (already reduced) stop list.
  removedStops: number[];
}

export function defaultState(): ViewState {
  return { period: "morning", cutoff: 0, routeId: null, removedStops: [] };
}

export function clampCutoff(value: number): number {
  if (!Number.isFinite(value)) return 0;
  return Math.min(100, Math.max(0, value));
}

export function encodeState(state: ViewState): string {
  const params = new URLSearchParams();
  params.set("period", state.period);
  params.set("cutoff", String(state.cutoff));
  if (state.routeId !== null) params.set("route", state.routeId);
  if (state.removedStops.length > 0) params.set("removed", state.removedStops.join(","));
  return "#" + params.toString();
}

export function decodeState(hash: string): ViewState {
  const state = defaultState();
  const raw = hash.startsWith("#") ? hash.slice(1) : hash;
  if (!raw) return state;
  const params = new URLSearchParams(raw);
  const period = params.get("period");
  if (period && (PERIODS as readonly string[]).includes(period)) {
    state.period = period as Period;
  }
  const cutoff = params.get("cutoff");
  if (cutoff !== null) state.cutoff = clampCutoff(Number(cutoff));
  const route = params.get("route");
  if (route) state.routeId = route;
  const removed = params.get("removed");
  if (removed) {
    state.removedStops = removed
      .split(",")
      .map((x) => Number(x))
      .filter((x) => Number.isInteger(x) && x > 0);
  }
  return state;
}

export interface BrowserEntry {
  routeId: string;
  improvementPct: number;
  changed: boolean;
}

// The cutoff is a pure client-side filter over server data, so dragging it
// re-filters instantly without another request.
export function filterRoutes(
  routes: RoutesResponse,
  period: Period,
  cutoff: number,
): BrowserEntry[] {
  const entries: BrowserEntry[] = [];
  for (const route of routes.routes) {
    const summary = route.periods[period];
    if (!summary) continue;
    if (summary.improvement_pct >= cutoff) {
      entries.push({
        routeId: route.route_id,
        improvementPct: summary.improvement_pct,
        changed: summary.changed,
      });
    }
  }
  entries.sort(
    (a, b) => b.improvementPct - a.improvementPct || a.routeId.localeCompare(b.routeId),
  );
  return entries;
}
