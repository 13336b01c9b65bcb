// Wiring: URL-hash state, data loading with last-write-wins guards per
// panel, and event handlers. The server is never mutated; what-ifs are
// recomputed on demand and stack client-side only.

import { ApiClient, ApiError, Period, PERIODS, RoutesResponse, Suggestion } from "./api.js";
import { renderEmbedding, renderHistogram } from "./charts.js";
import { renderRouteMap } from "./map.js";
import {
  renderComparison,
  renderInlineError,
  renderReorderResult,
  renderRouteBrowser,
  renderWhatIfPanel,
  renderWhatIfResult,
} from "./panels.js";
import { LatestWins } from "./seq.js";
import { ViewState, clampCutoff, decodeState, encodeState, filterRoutes } from "./state.js";

interface Elements {
  banner: HTMLElement;
  periodSelect: HTMLSelectElement;
  cutoffInput: HTMLInputElement;
  browser: HTMLElement;
  map: HTMLElement;
  comparison: HTMLElement;
  whatif: HTMLElement;
  distribution: HTMLElement;
  embedding: HTMLElement;
}

export class PlannerApp {
  private state: ViewState;
  private routesCache: RoutesResponse | null = null;
  private detailGuard = new LatestWins();
  private distributionGuard = new LatestWins();
  private whatifGuard = new LatestWins();
  private currentSuggestion: Suggestion | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly el: Elements,
    initialHash: string = "",
  ) {
    this.state = decodeState(initialHash);
  }

  getState(): ViewState {
    return { ...this.state, removedStops: [...this.state.removedStops] };
  }

  private pushUrl(): void {
    if (typeof history !== "undefined" && history.replaceState) {
      history.replaceState(null, "", encodeState(this.state));
    }
  }

  async start(): Promise<void> {
    this.el.periodSelect.innerHTML = PERIODS.map(
      (p) => `<option value="${p}">${p}</option>`,
    ).join("");
    this.el.periodSelect.value = this.state.period;
    this.el.periodSelect.addEventListener("change", () => {
      this.setPeriod(this.el.periodSelect.value as Period);
    });
    this.el.cutoffInput.value = String(this.state.cutoff);
    this.el.cutoffInput.addEventListener("change", () => {
      this.setCutoff(Number(this.el.cutoffInput.value));
    });
    await this.reload();
  }

  async reload(): Promise<void> {
    this.el.banner.textContent = "";
    this.el.banner.classList.remove("visible");
    try {
      this.routesCache = await this.api.routes();
    } catch (error) {
      this.showBanner(error);
      return;
    }
    this.renderBrowser();
    await Promise.all([this.loadDistribution(), this.loadEmbedding(), this.loadDetail()]);
  }

  private showBanner(error: unknown): void {
    this.el.banner.classList.add("visible");
    this.el.banner.textContent = "";
    const message = document.createElement("span");
    message.textContent =
      error instanceof ApiError
        ? `Service error: ${error.detail}`
        : "Cannot reach the planner service.";
    const retry = document.createElement("button");
    retry.type = "button";
    retry.setAttribute("data-role", "retry");
    retry.textContent = "retry";
    retry.addEventListener("click", () => void this.reload());
    this.el.banner.append(message, retry);
  }

  // Cutoff changes are pure client-side filtering over cached server data:
  // no request, no reload.
  setCutoff(value: number): void {
    this.state.cutoff = clampCutoff(value);
    this.el.cutoffInput.value = String(this.state.cutoff);
    this.pushUrl();
    this.renderBrowser();
  }

  setPeriod(period: Period): void {
    this.state.period = period;
    this.state.removedStops = [];
    this.pushUrl();
    this.renderBrowser();
    void this.loadDistribution();
    void this.loadDetail();
  }

  selectRoute(routeId: string): void {
    this.state.routeId = routeId;
    this.state.removedStops = [];
    this.pushUrl();
    this.renderBrowser();
    void this.loadDetail();
  }

  renderBrowser(): void {
    if (!this.routesCache) return;
    const entries = filterRoutes(this.routesCache, this.state.period, this.state.cutoff);
    renderRouteBrowser(this.el.browser, entries, this.state.routeId, (id) =>
      this.selectRoute(id),
    );
  }

  listedRouteIds(): string[] {
    if (!this.routesCache) return [];
    return filterRoutes(this.routesCache, this.state.period, this.state.cutoff).map(
      (e) => e.routeId,
    );
  }

  private async loadDistribution(): Promise<void> {
    try {
      const distribution = await this.distributionGuard.wrap(
        this.api.distribution(this.state.period),
      );
      if (distribution === null) return;
      renderHistogram(this.el.distribution, distribution, this.state.cutoff, (pct) =>
        this.setCutoff(pct),
      );
    } catch (error) {
      this.showBanner(error);
    }
  }

  private async loadEmbedding(): Promise<void> {
    try {
      renderEmbedding(this.el.embedding, await this.api.embedding());
    } catch (error) {
      this.showBanner(error);
    }
  }

  private async loadDetail(): Promise<void> {
    if (this.state.routeId === null) {
      this.el.comparison.textContent = "";
      this.el.map.textContent = "";
      this.el.whatif.textContent = "";
      return;
    }
    try {
      const suggestion = await this.detailGuard.wrap(
        this.api.routeDetail(this.state.routeId, this.state.period),
      );
      if (suggestion === null) return;
      this.showSuggestion(suggestion);
      // Replay the URL-encoded what-if stack so a reload reproduces the view.
      for (const index of this.state.removedStops) {
        await this.applyRemoval(index, false);
      }
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.el.comparison.textContent = "";
        const missing = document.createElement("p");
        missing.className = "empty-state";
        missing.setAttribute("data-role", "not-found");
        missing.textContent = `No suggestion for route ${this.state.routeId}.`;
        this.el.comparison.appendChild(missing);
        this.el.map.textContent = "";
        this.el.whatif.textContent = "";
      } else {
        this.showBanner(error);
      }
    }
  }

  private showSuggestion(suggestion: Suggestion): void {
    this.currentSuggestion = suggestion;
    renderComparison(this.el.comparison, suggestion);
    renderRouteMap(
      this.el.map,
      suggestion.original_geometry,
      suggestion.proposed_geometry,
      suggestion.changed,
    );
    renderWhatIfPanel(this.el.whatif, suggestion, this.state.removedStops.length, {
      onRemove: (index) => void this.applyRemoval(index, true),
      onPop: () => void this.popRemoval(),
      onReorder: () => void this.runReorder(),
    });
  }

  async applyRemoval(stopIndex: number, pushState: boolean): Promise<void> {
    if (!this.state.routeId) return;
    try {
      const response = await this.whatifGuard.wrap(
        this.api.whatif(this.state.routeId, this.state.period, stopIndex),
      );
      if (response === null) return;
      if (pushState) {
        this.state.removedStops.push(stopIndex);
        this.pushUrl();
      }
      this.showSuggestion(response.suggestion);
      renderWhatIfResult(this.el.whatif, response);
    } catch (error) {
      if (error instanceof ApiError) {
        renderInlineError(this.el.whatif, error.detail);
      } else {
        this.showBanner(error);
      }
    }
  }

  private async popRemoval(): Promise<void> {
    this.state.removedStops.pop();
    this.pushUrl();
    await this.loadDetail();
  }

  private async runReorder(): Promise<void> {
    if (!this.state.routeId) return;
    try {
      const response = await this.api.reorder(this.state.routeId, this.state.period);
      renderReorderResult(this.el.whatif, response);
    } catch (error) {
      if (error instanceof ApiError) {
        renderInlineError(this.el.whatif, error.detail);
      } else {
        this.showBanner(error);
      }
    }
  }

  suggestion(): Suggestion | null {
    return this.currentSuggestion;
  }
}

export function mount(root: Document = document): PlannerApp {
  const get = (id: string) => {
    const element = root.getElementById(id);
    if (!element) throw new Error(`missing element #${id}`);
    return element;
  };
  const app = new PlannerApp(
    new ApiClient(""),
    {
      banner: get("banner"),
      periodSelect: get("period-select") as HTMLSelectElement,
      cutoffInput: get("cutoff-input") as HTMLInputElement,
      browser: get("route-browser"),
      map: get("route-map"),
      comparison: get("comparison"),
      whatif: get("whatif"),
      distribution: get("distribution"),
      embedding: get("embedding"),
    },
    root.location ? root.location.hash : "",
  );
  void app.start();
  return app;
}

declare global {
  interface Window {
    plannerApp?: PlannerApp;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("route-browser")) {
  window.plannerApp = mount(document);
}
