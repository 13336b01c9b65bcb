// DOM builders for the route browser, the attribute comparison table and the
// what-if controls. All numbers render straight from API fields.

import { AttributeTotals, ReorderResponse, Suggestion, WhatIfResponse } from "./api.js";
import { BrowserEntry } from "./state.js";

export const MAX_REORDER_STOPS = 8;

const ATTRIBUTE_LABELS: [keyof AttributeTotals, string][] = [
  ["length_m", "Length (meters)"],
  ["n_traffic_lights", "Traffic lights"],
  ["n_pt_stops", "PT stops"],
  ["n_petrol_stations", "Petrol stations"],
  ["n_public_parking", "Public parking spots"],
  ["n_private_parking", "Private parking spots"],
];

export function renderRouteBrowser(
  container: HTMLElement,
  entries: BrowserEntry[],
  selected: string | null,
  onSelect: (routeId: string) => void,
): void {
  container.textContent = "";
  if (entries.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.setAttribute("data-role", "browser-empty");
    empty.textContent = "No routes clear the current cutoff. Lower it to see candidates.";
    container.appendChild(empty);
    return;
  }
  const list = document.createElement("ul");
  list.className = "route-list";
  for (const entry of entries) {
    const item = document.createElement("li");
    item.className = "route-item" + (entry.routeId === selected ? " selected" : "");
    item.setAttribute("data-route-id", entry.routeId);

    const button = document.createElement("button");
    button.type = "button";
    button.className = "route-button";
    button.addEventListener("click", () => onSelect(entry.routeId));

    const name = document.createElement("span");
    name.className = "route-name";
    name.textContent = entry.routeId;

    const pct = document.createElement("span");
    pct.className = "route-pct";
    pct.textContent = `${entry.improvementPct.toFixed(2)}%`;

    const badge = document.createElement("span");
    badge.className = "badge " + (entry.changed ? "badge-changed" : "badge-unchanged");
    badge.textContent = entry.changed ? "changed" : "unchanged";

    button.append(name, pct, badge);
    item.appendChild(button);
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderComparison(container: HTMLElement, suggestion: Suggestion): void {
  container.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = `${suggestion.route_id} · ${suggestion.period}`;
  container.appendChild(heading);

  const summary = document.createElement("p");
  summary.className = "improvement-summary";
  summary.setAttribute("data-role", "improvement");
  summary.textContent = suggestion.changed
    ? `Improvement: ${suggestion.improvement_pct}% ` +
      `(cost ${suggestion.original_cost} → ${suggestion.proposed_cost})`
    : "Route unchanged: the current path is already optimal for these weights.";
  container.appendChild(summary);

  const table = document.createElement("table");
  table.className = "comparison-table";
  const head = table.createTHead().insertRow();
  for (const text of ["Attribute", "Original", "Proposed"]) {
    const cell = document.createElement("th");
    cell.textContent = text;
    head.appendChild(cell);
  }
  const body = table.createTBody();
  for (const [key, label] of ATTRIBUTE_LABELS) {
    const row = body.insertRow();
    row.insertCell().textContent = label;
    row.insertCell().textContent = String(suggestion.attribute_comparison.original[key]);
    row.insertCell().textContent = String(suggestion.attribute_comparison.proposed[key]);
  }
  container.appendChild(table);
}

export interface WhatIfCallbacks {
  onRemove: (stopIndex: number) => void;
  onPop: () => void;
  onReorder: () => void;
}

export function renderWhatIfPanel(
  container: HTMLElement,
  suggestion: Suggestion,
  stackDepth: number,
  callbacks: WhatIfCallbacks,
): void {
  container.textContent = "";
  const heading = document.createElement("h3");
  heading.textContent = "What-if: remove a stop";
  container.appendChild(heading);

  const list = document.createElement("ol");
  list.className = "stop-list";
  const last = suggestion.stop_ids.length - 1;
  suggestion.stop_ids.forEach((stopId, index) => {
    const item = document.createElement("li");
    const label = document.createElement("span");
    label.textContent = stopId;
    const remove = document.createElement("button");
    remove.type = "button";
    remove.className = "remove-stop";
    remove.setAttribute("data-stop-index", String(index));
    remove.textContent = "remove";
    const isEndpoint = index === 0 || index === last;
    remove.disabled = isEndpoint;
    if (isEndpoint) {
      remove.title = "Endpoints cannot be removed";
    } else {
      remove.addEventListener("click", () => callbacks.onRemove(index));
    }
    item.append(label, remove);
    list.appendChild(item);
  });
  container.appendChild(list);

  const controls = document.createElement("div");
  controls.className = "whatif-controls";

  const pop = document.createElement("button");
  pop.type = "button";
  pop.setAttribute("data-role", "pop-whatif");
  pop.textContent = stackDepth > 0 ? `undo last removal (${stackDepth} applied)` : "no removals applied";
  pop.disabled = stackDepth === 0;
  pop.addEventListener("click", () => callbacks.onPop());
  controls.appendChild(pop);

  const reorder = document.createElement("button");
  reorder.type = "button";
  reorder.setAttribute("data-role", "reorder");
  reorder.textContent = "find best stop order";
  if (suggestion.stop_ids.length > MAX_REORDER_STOPS) {
    reorder.disabled = true;
    reorder.title = `Reordering supports at most ${MAX_REORDER_STOPS} stops; this route has ${suggestion.stop_ids.length}.`;
  } else {
    reorder.addEventListener("click", () => callbacks.onReorder());
  }
  controls.appendChild(reorder);
  container.appendChild(controls);

  const result = document.createElement("div");
  result.className = "whatif-result";
  result.setAttribute("data-role", "whatif-result");
  container.appendChild(result);
}

export function renderWhatIfResult(container: HTMLElement, response: WhatIfResponse): void {
  const slot = container.querySelector('[data-role="whatif-result"]');
  if (!slot) return;
  slot.textContent = "";
  const message = document.createElement("p");
  message.setAttribute("data-role", "cost-delta");
  // The delta is displayed exactly as the server sent it.
  message.textContent =
    `Removing the stop saves ${response.cost_delta} seconds ` +
    `(baseline ${response.baseline_proposed_cost}, new ${response.suggestion.proposed_cost}).`;
  slot.appendChild(message);
}

export function renderReorderResult(container: HTMLElement, response: ReorderResponse): void {
  const slot = container.querySelector('[data-role="whatif-result"]');
  if (!slot) return;
  slot.textContent = "";
  const message = document.createElement("p");
  message.setAttribute("data-role", "reorder-result");
  message.textContent =
    `Best order: ${response.order_stop_ids.join(" → ")} ` +
    `(cost ${response.cost}, fixed-order baseline ${response.baseline_cost}).`;
  slot.appendChild(message);
}

export function renderInlineError(container: HTMLElement, detail: string): void {
  const slot = container.querySelector('[data-role="whatif-result"]');
  if (!slot) return;
  slot.textContent = "";
  const message = document.createElement("p");
  message.className = "inline-error";
  message.setAttribute("data-role", "inline-error");
  message.textContent = detail;
  slot.appendChild(message);
}
