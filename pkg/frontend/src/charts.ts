// Improvement histogram with a draggable cutoff marker, and the time-of-day
// embedding scatter. Both are plain SVG; values come straight from the API.

import { DistributionResponse, EmbeddingResponse } from "./api.js";

const H_WIDTH = 560;
const H_HEIGHT = 180;
const H_PAD = 24;

export function renderHistogram(
  container: HTMLElement,
  distribution: DistributionResponse,
  cutoff: number,
  onCutoffChange: (pct: number) => void,
): void {
  container.textContent = "";
  const bins = distribution.histogram.bins;
  const total = bins.reduce((acc, b) => acc + b.count, 0);
  if (total === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No routes in this period yet.";
    container.appendChild(empty);
    return;
  }

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${H_WIDTH} ${H_HEIGHT}`);
  svg.setAttribute("class", "histogram");
  const plotWidth = H_WIDTH - 2 * H_PAD;
  const plotHeight = H_HEIGHT - 2 * H_PAD;
  const maxCount = Math.max(...bins.map((b) => b.count));
  const binWidth = plotWidth / bins.length;

  for (const bin of bins) {
    const bar = document.createElementNS("http://www.w3.org/2000/svg", "rect");
    const height = maxCount > 0 ? (bin.count / maxCount) * plotHeight : 0;
    bar.setAttribute("x", String(H_PAD + bin.lo * binWidth));
    bar.setAttribute("y", String(H_HEIGHT - H_PAD - height));
    bar.setAttribute("width", String(Math.max(binWidth - 0.5, 0.5)));
    bar.setAttribute("height", String(height));
    bar.setAttribute("class", "histogram-bar");
    svg.appendChild(bar);
  }

  const pctToX = (pct: number) => H_PAD + (pct / 100) * plotWidth;
  const xToPct = (x: number) => Math.min(100, Math.max(0, ((x - H_PAD) / plotWidth) * 100));

  const marker = document.createElementNS("http://www.w3.org/2000/svg", "line");
  marker.setAttribute("x1", String(pctToX(cutoff)));
  marker.setAttribute("x2", String(pctToX(cutoff)));
  marker.setAttribute("y1", String(H_PAD / 2));
  marker.setAttribute("y2", String(H_HEIGHT - H_PAD));
  marker.setAttribute("class", "cutoff-marker");
  marker.setAttribute("data-role", "cutoff-marker");
  svg.appendChild(marker);

  // Dragging the marker (or clicking anywhere on the plot) moves the cutoff;
  // the caller re-filters the route browser without any reload.
  let dragging = false;
  const moveTo = (clientX: number) => {
    const rect = svg.getBoundingClientRect();
    const scale = rect.width > 0 ? H_WIDTH / rect.width : 1;
    const pct = xToPct((clientX - rect.left) * scale);
    marker.setAttribute("x1", String(pctToX(pct)));
    marker.setAttribute("x2", String(pctToX(pct)));
    onCutoffChange(Math.round(pct * 10) / 10);
  };
  svg.addEventListener("pointerdown", (event) => {
    dragging = true;
    moveTo(event.clientX);
  });
  svg.addEventListener("pointermove", (event) => {
    if (dragging) moveTo(event.clientX);
  });
  const stop = () => {
    dragging = false;
  };
  svg.addEventListener("pointerup", stop);
  svg.addEventListener("pointerleave", stop);

  container.appendChild(svg);

  const readout = document.createElement("div");
  readout.className = "percentiles";
  readout.setAttribute("data-role", "percentiles");
  const parts: string[] = [];
  for (const key of ["50", "75", "90", "95"] as const) {
    parts.push(`p${key}: ${distribution.percentiles[key]}%`);
  }
  parts.push(`changed: ${distribution.changed_fraction}`);
  readout.textContent = parts.join("  ·  ");
  container.appendChild(readout);
}

const E_SIZE = 260;
const E_PAD = 30;

export function renderEmbedding(container: HTMLElement, embedding: EmbeddingResponse): void {
  container.textContent = "";
  const points = embedding.points;
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = Math.min((E_SIZE - 2 * E_PAD) / spanX, (E_SIZE - 2 * E_PAD) / spanY);

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${E_SIZE} ${E_SIZE}`);
  svg.setAttribute("class", "embedding");
  for (const point of points) {
    const cx = E_PAD + (point.x - minX) * scale;
    const cy = E_SIZE - E_PAD - (point.y - minY) * scale;
    const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
    dot.setAttribute("cx", String(cx));
    dot.setAttribute("cy", String(cy));
    dot.setAttribute("r", "5");
    dot.setAttribute("class", `embedding-dot period-${point.period}`);
    dot.setAttribute("data-period", point.period);
    svg.appendChild(dot);
    const label = document.createElementNS("http://www.w3.org/2000/svg", "text");
    label.setAttribute("x", String(cx + 8));
    label.setAttribute("y", String(cy + 4));
    label.setAttribute("class", "embedding-label");
    label.textContent = point.period;
    svg.appendChild(label);
  }
  container.appendChild(svg);
}
