// Typed client for the planner service. The UI displays these payloads
// verbatim; it never recomputes costs or improvements.

export const PERIODS = ["morning", "noon", "afternoon", "evening", "night"] as const;
export type Period = (typeof PERIODS)[number];

export interface PeriodSummary {
  improvement_pct: number;
  changed: boolean;
}

export interface RouteListItem {
  route_id: string;
  periods: Partial<Record<Period, PeriodSummary>>;
}

export interface RoutesResponse {
  routes: RouteListItem[];
}

export interface LineString {
  type: "LineString";
  coordinates: [number, number][];
}

export interface AttributeTotals {
  length_m: number;
  n_traffic_lights: number;
  n_pt_stops: number;
  n_petrol_stations: number;
  n_public_parking: number;
  n_private_parking: number;
}

export interface Suggestion {
  route_id: string;
  period: Period;
  stop_ids: string[];
  stop_nodes: number[];
  original_edges: number[];
  proposed_edges: number[];
  original_cost: number;
  proposed_cost: number;
  improvement_pct: number;
  changed: boolean;
  attribute_comparison: { original: AttributeTotals; proposed: AttributeTotals };
  original_geometry?: LineString;
  proposed_geometry?: LineString;
}

export interface HistogramBin {
  lo: number;
  hi: number;
  count: number;
}

export interface DistributionResponse {
  period: Period;
  routes: { route_id: string; improvement_pct: number; changed: boolean }[];
  percentiles: Record<"50" | "75" | "90" | "95", number>;
  changed_fraction: number;
  histogram: { bin_width_pct: number; bins: HistogramBin[] };
}

export interface EmbeddingResponse {
  points: { period: Period; x: number; y: number }[];
}

export interface WhatIfResponse {
  route_id: string;
  suggestion: Suggestion;
  baseline_proposed_cost: number;
  cost_delta: number;
}

export interface ReorderResponse {
  route_id: string;
  period: Period;
  order_stop_ids: string[];
  order_nodes: number[];
  cost: number;
  baseline_cost: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && body.detail !== undefined) {
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  routes(): Promise<RoutesResponse> {
    return this.get("/api/routes");
  }

  routeDetail(routeId: string, period: Period): Promise<Suggestion> {
    return this.get(`/api/routes/${encodeURIComponent(routeId)}?period=${period}`);
  }

  distribution(period: Period): Promise<DistributionResponse> {
    return this.get(`/api/distribution?period=${period}`);
  }

  embedding(): Promise<EmbeddingResponse> {
    return this.get("/api/embedding");
  }

  whatif(routeId: string, period: Period, removeStopIndex: number): Promise<WhatIfResponse> {
    return this.post("/api/whatif", {
      route_id: routeId,
      period,
      remove_stop_index: removeStopIndex,
    });
  }

  reorder(routeId: string, period: Period): Promise<ReorderResponse> {
    return this.post("/api/reorder", { route_id: routeId, period });
  }
}
