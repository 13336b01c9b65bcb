// SVG rendering of original vs proposed route geometries. Desk-scale cities
// fit a plain equirectangular fit-to-viewport projection.

import { LineString } from "./api.js";

const WIDTH = 520;
const HEIGHT = 420;
const PAD = 20;

function bounds(lines: LineString[]): [number, number, number, number] {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const line of lines) {
    for (const [lon, lat] of line.coordinates) {
      minX = Math.min(minX, lon);
      maxX = Math.max(maxX, lon);
      minY = Math.min(minY, lat);
      maxY = Math.max(maxY, lat);
    }
  }
  return [minX, minY, maxX, maxY];
}

function toPoints(
  line: LineString,
  box: [number, number, number, number],
): string {
  const [minX, minY, maxX, maxY] = box;
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = Math.min((WIDTH - 2 * PAD) / spanX, (HEIGHT - 2 * PAD) / spanY);
  return line.coordinates
    .map(([lon, lat]) => {
      const x = PAD + (lon - minX) * scale;
      const y = HEIGHT - PAD - (lat - minY) * scale;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}

export function renderRouteMap(
  container: HTMLElement,
  original: LineString | undefined,
  proposed: LineString | undefined,
  changed: boolean,
): void {
  container.textContent = "";
  const lines = [original, proposed].filter((l): l is LineString => !!l);
  if (lines.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No geometry available for this route.";
    container.appendChild(empty);
    return;
  }
  const box = bounds(lines);
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "route-map");

  if (original) {
    const poly = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    poly.setAttribute("points", toPoints(original, box));
    poly.setAttribute("class", "path-original");
    poly.setAttribute("data-role", "original");
    svg.appendChild(poly);
  }
  // An unchanged proposal would perfectly overlap the original, so only a
  // changed route draws the second polyline.
  if (proposed && changed) {
    const poly = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    poly.setAttribute("points", toPoints(proposed, box));
    poly.setAttribute("class", "path-proposed");
    poly.setAttribute("data-role", "proposed");
    svg.appendChild(poly);
  }
  container.appendChild(svg);

  const legend = document.createElement("div");
  legend.className = "map-legend";
  if (changed) {
    legend.innerHTML =
      '<span class="swatch swatch-original"></span> original' +
      '<span class="swatch swatch-proposed"></span> proposed';
  } else {
    legend.textContent = "Route unchanged: the proposal matches the original path.";
  }
  container.appendChild(legend);
}
