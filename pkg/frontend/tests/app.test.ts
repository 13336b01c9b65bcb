// App-level tests against payloads captured from a real synthetic workspace:
// the route browser under a 5% cutoff, cutoff dragging without a reload, and
// the what-if round trip displaying the server's cost delta unmodified.
import { beforeEach, describe, expect, it } from "vitest";

import {
  DistributionResponse,
  EmbeddingResponse,
  RoutesResponse,
  Suggestion,
  WhatIfResponse,
  ApiClient,
} from "../src/api";
import { PlannerApp } from "../src/main";
import { FetchCall, appDom, fixture, flush, installFetchMock } from "./helpers";

const routes = fixture<RoutesResponse>("routes.json");
const distribution = fixture<DistributionResponse>("distribution_morning.json");
const embedding = fixture<EmbeddingResponse>("embedding.json");
const detail = fixture<Suggestion>("route_detail.json");
const whatif = fixture<WhatIfResponse>("whatif.json");
const groundTruth = fixture<{ corridor_routes: string[] }>(
  "ground_truth_corridor_routes.json",
);

function standardMock(): FetchCall[] {
  return installFetchMock([
    { method: "GET", match: (u) => u === "/api/routes", payload: routes },
    {
      method: "GET",
      match: (u) => u.startsWith("/api/distribution"),
      payload: distribution,
    },
    { method: "GET", match: (u) => u === "/api/embedding", payload: embedding },
    {
      method: "GET",
      match: (u) => u.startsWith(`/api/routes/${detail.route_id}`),
      payload: detail,
    },
    { method: "POST", match: (u) => u === "/api/whatif", payload: whatif },
  ]);
}

function elements() {
  appDom();
  return {
    banner: document.getElementById("banner")!,
    periodSelect: document.getElementById("period-select") as HTMLSelectElement,
    cutoffInput: document.getElementById("cutoff-input") as HTMLInputElement,
    browser: document.getElementById("route-browser")!,
    map: document.getElementById("route-map")!,
    comparison: document.getElementById("comparison")!,
    whatif: document.getElementById("whatif")!,
    distribution: document.getElementById("distribution")!,
    embedding: document.getElementById("embedding")!,
  };
}

function listedRouteIds(): string[] {
  return [...document.querySelectorAll("[data-route-id]")].map(
    (el) => el.getAttribute("data-route-id")!,
  );
}

describe("planner app", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("lists exactly the ground-truth corridor routes at a 5% cutoff", async () => {
    standardMock();
    const app = new PlannerApp(new ApiClient(""), elements(), "#period=morning&cutoff=5");
    await app.start();
    await flush();
    expect([...listedRouteIds()].sort()).toEqual(
      [...groundTruth.corridor_routes].sort(),
    );
  });

  it("dragging the cutoff marker re-filters the list without a reload", async () => {
    const calls = standardMock();
    const app = new PlannerApp(new ApiClient(""), elements(), "#period=morning&cutoff=0");
    await app.start();
    await flush();
    expect(listedRouteIds()).toHaveLength(routes.routes.length);
    const routesFetches = () => calls.filter((c) => c.url === "/api/routes").length;
    const fetchesBefore = routesFetches();

    // jsdom has no layout: getBoundingClientRect is all zeros, so clientX maps
    // 1:1 onto the SVG view box. x=304 corresponds to 50% of the plot.
    const svg = document.querySelector(".histogram")!;
    svg.dispatchEvent(new MouseEvent("pointerdown", { clientX: 304, bubbles: true }));
    svg.dispatchEvent(new MouseEvent("pointerup", { bubbles: true }));
    await flush();

    expect(app.getState().cutoff).toBeGreaterThan(5);
    expect([...listedRouteIds()].sort()).toEqual(
      [...groundTruth.corridor_routes].sort(),
    );
    expect(routesFetches()).toBe(fetchesBefore); // pure client-side filter
  });

  it("round-trips a what-if removal and shows the server delta verbatim", async () => {
    const calls = standardMock();
    const app = new PlannerApp(
      new ApiClient(""),
      elements(),
      `#period=morning&route=${detail.route_id}`,
    );
    await app.start();
    await flush();

    const interior = document.querySelector(
      '.remove-stop[data-stop-index="2"]',
    ) as HTMLButtonElement;
    expect(interior.disabled).toBe(false);
    interior.click();
    await flush();

    const post = calls.find((c) => c.method === "POST" && c.url === "/api/whatif");
    expect(post?.body).toEqual({
      route_id: detail.route_id,
      period: "morning",
      remove_stop_index: 2,
    });
    const deltaText = document.querySelector('[data-role="cost-delta"]')?.textContent;
    expect(deltaText).toContain(String(whatif.cost_delta));
    expect(app.getState().removedStops).toEqual([2]);
    // The reduced suggestion replaces the panel: one stop fewer.
    const stops = document.querySelectorAll(".remove-stop");
    expect(stops).toHaveLength(whatif.suggestion.stop_ids.length);
  });

  it("reload with an encoded what-if stack replays it", async () => {
    standardMock();
    const app = new PlannerApp(
      new ApiClient(""),
      elements(),
      `#period=morning&route=${detail.route_id}&removed=2`,
    );
    await app.start();
    await flush();
    const deltaText = document.querySelector('[data-role="cost-delta"]')?.textContent;
    expect(deltaText).toContain(String(whatif.cost_delta));
  });

  it("shows a retry banner when the service is down", async () => {
    installFetchMock([]); // every request 404s
    globalThis.fetch = (async () => {
      throw new TypeError("fetch failed");
    }) as typeof fetch;
    const app = new PlannerApp(new ApiClient(""), elements(), "");
    await app.start();
    await flush();
    const banner = document.getElementById("banner")!;
    expect(banner.classList.contains("visible")).toBe(true);
    expect(banner.querySelector('[data-role="retry"]')).toBeTruthy();
  });

  it("surfaces a 422 what-if inline next to the controls", async () => {
    installFetchMock([
      { method: "GET", match: (u) => u === "/api/routes", payload: routes },
      {
        method: "GET",
        match: (u) => u.startsWith("/api/distribution"),
        payload: distribution,
      },
      { method: "GET", match: (u) => u === "/api/embedding", payload: embedding },
      {
        method: "GET",
        match: (u) => u.startsWith(`/api/routes/${detail.route_id}`),
        payload: detail,
      },
      {
        method: "POST",
        match: (u) => u === "/api/whatif",
        status: 422,
        payload: fixture("whatif_error_422.json"),
      },
    ]);
    const app = new PlannerApp(
      new ApiClient(""),
      elements(),
      `#period=morning&route=${detail.route_id}`,
    );
    await app.start();
    await flush();
    (document.querySelector('.remove-stop[data-stop-index="2"]') as HTMLButtonElement).click();
    await flush();
    const inline = document.querySelector('[data-role="inline-error"]');
    expect(inline).toBeTruthy();
    expect(app.getState().removedStops).toEqual([]); // failed removal not stacked
  });

  it("shows an inline not-found state for an unknown route", async () => {
    installFetchMock([
      { method: "GET", match: (u) => u === "/api/routes", payload: routes },
      {
        method: "GET",
        match: (u) => u.startsWith("/api/distribution"),
        payload: distribution,
      },
      { method: "GET", match: (u) => u === "/api/embedding", payload: embedding },
      {
        method: "GET",
        match: (u) => u.startsWith("/api/routes/GHOST"),
        status: 404,
        payload: { detail: "unknown route 'GHOST'" },
      },
    ]);
    const app = new PlannerApp(new ApiClient(""), elements(), "#period=morning&route=GHOST");
    await app.start();
    await flush();
    expect(document.querySelector('[data-role="not-found"]')).toBeTruthy();
  });

  it("renders five labeled embedding points", async () => {
    standardMock();
    const app = new PlannerApp(new ApiClient(""), elements(), "");
    await app.start();
    await flush();
    const dots = document.querySelectorAll(".embedding-dot");
    expect(dots).toHaveLength(5);
    const labels = [...document.querySelectorAll(".embedding-label")].map(
      (l) => l.textContent,
    );
    expect(labels).toEqual(["morning", "noon", "afternoon", "evening", "night"]);
  });

  it("shows percentile readouts verbatim from the API", async () => {
    standardMock();
    const app = new PlannerApp(new ApiClient(""), elements(), "");
    await app.start();
    await flush();
    const text = document.querySelector('[data-role="percentiles"]')?.textContent ?? "";
    for (const key of ["50", "75", "90", "95"] as const) {
      expect(text).toContain(`p${key}: ${distribution.percentiles[key]}%`);
    }
  });
});
