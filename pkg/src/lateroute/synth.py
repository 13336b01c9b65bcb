"""Deterministic synthetic-city generator with planted congestion.

Produces a street-grid GTFS feed, smart-card boardings, POIs and a ground
truth JSON so the full pipeline can be verified end to end: routes cover
every street in both directions, a slow corridor adds a known delay during
chosen periods, and corridor segments carry extra traffic lights so the
regressor has a learnable signal. Also hosts the exhaustive simple-path
oracle used to check the routing engine on small graphs.
"""
from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geo, ingest, network
from .network import PERIOD_ORDER, TimePeriod
from .optimizer import WeightedGraph, dijkstra_distances

BASE_DATE = "2024-03-04"


@dataclass(frozen=True)
class Corridor:
    """Contiguous slow street segments along one row or column."""

    axis: str  # "row" or "col"
    index: int
    start: int  # first grid position of the run
    end: int  # last grid position (exclusive segment count = end - start)
    delay_s: float  # total extra delay over the whole run
    periods: tuple[TimePeriod, ...]

    @classmethod
    def from_dict(cls, d: dict) -> "Corridor":
        return cls(
            axis=d["axis"],
            index=int(d["index"]),
            start=int(d["start"]),
            end=int(d["end"]),
            delay_s=float(d["delay_s"]),
            periods=tuple(TimePeriod(p) for p in d["periods"]),
        )

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "index": self.index,
            "start": self.start,
            "end": self.end,
            "delay_s": self.delay_s,
            "periods": [p.value for p in self.periods],
        }

    def segments(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        segs = []
        for i in range(self.start, self.end):
            if self.axis == "row":
                segs.append(((self.index, i), (self.index, i + 1)))
            else:
                segs.append(((i, self.index), (i + 1, self.index)))
        return segs


@dataclass
class SynthSpec:
    rows: int = 10
    cols: int = 10
    spacing_m: float = 200.0
    n_routes: int = 20
    stop_every_blocks: int = 2
    boardings_per_stop_per_day: int = 60
    n_days: int = 2
    headway_min: int = 30
    speed_mps: float = 5.0
    noise_s: float = 15.0
    corridors: list[Corridor] = field(default_factory=list)
    seed: int = 0
    origin_lat: float = 0.0
    origin_lon: float = 0.0
    lights_per_corridor_segment: int = 3
    # Optional scattered POIs (kind -> count), uniform over the grid box;
    # they enrich the feature space without touching the planted delays.
    scattered_pois: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.rows < 3 or self.cols < 3:
            raise ValueError("grid must be at least 3x3")
        if self.n_routes < 1 or self.n_routes > self.rows + self.cols:
            raise ValueError(f"n_routes must be in [1, {self.rows + self.cols}]")
        for c in self.corridors:
            if c.axis not in ("row", "col"):
                raise ValueError(f"corridor axis must be 'row' or 'col', got {c.axis!r}")
            lane = self.cols if c.axis == "row" else self.rows
            across = self.rows if c.axis == "row" else self.cols
            if not (0 <= c.index < across) or not (0 <= c.start < c.end < lane):
                raise ValueError(f"corridor references nonexistent edges: {c}")
            if c.delay_s < 0:
                raise ValueError("corridor delay must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        kwargs = dict(d)
        kwargs["corridors"] = [Corridor.from_dict(c) for c in d.get("corridors", [])]
        return cls(**kwargs)

    def to_dict(self) -> dict:
        doc = {
            "rows": self.rows,
            "cols": self.cols,
            "spacing_m": self.spacing_m,
            "n_routes": self.n_routes,
            "stop_every_blocks": self.stop_every_blocks,
            "boardings_per_stop_per_day": self.boardings_per_stop_per_day,
            "n_days": self.n_days,
            "headway_min": self.headway_min,
            "speed_mps": self.speed_mps,
            "noise_s": self.noise_s,
            "corridors": [c.to_dict() for c in self.corridors],
            "seed": self.seed,
            "origin_lat": self.origin_lat,
            "origin_lon": self.origin_lon,
            "lights_per_corridor_segment": self.lights_per_corridor_segment,
            "scattered_pois": dict(self.scattered_pois),
        }
        return doc


@dataclass
class _Route:
    route_id: str
    axis: str
    index: int
    # Grid positions along the street, in the forward direction.
    points: list[tuple[int, int]]
    stop_positions: list[int]  # indices into `points`


def _grid_latlon(spec: SynthSpec, r: int, c: int) -> tuple[float, float]:
    dlat = math.degrees(spec.spacing_m / geo.EARTH_RADIUS_M)
    dlon = math.degrees(
        spec.spacing_m / (geo.EARTH_RADIUS_M * math.cos(math.radians(spec.origin_lat)))
    )
    return spec.origin_lat + r * dlat, spec.origin_lon + c * dlon


def _routes(spec: SynthSpec) -> list[_Route]:
    n_h = min(spec.rows, (spec.n_routes + 1) // 2)
    n_v = spec.n_routes - n_h
    if n_v > spec.cols:
        n_h, n_v = spec.n_routes - spec.cols, spec.cols
    routes: list[_Route] = []

    def stop_positions(n_points: int) -> list[int]:
        pos = list(range(0, n_points, spec.stop_every_blocks))
        if pos[-1] != n_points - 1:
            pos.append(n_points - 1)
        return pos

    for k in range(n_h):
        row = k * spec.rows // n_h
        points = [(row, c) for c in range(spec.cols)]
        routes.append(
            _Route(f"H{row:02d}", "row", row, points, stop_positions(len(points)))
        )
    for k in range(n_v):
        col = k * spec.cols // n_v
        points = [(r, col) for r in range(spec.rows)]
        routes.append(
            _Route(f"V{col:02d}", "col", col, points, stop_positions(len(points)))
        )
    return routes


def _clock(seconds: int) -> str:
    h, rem = divmod(seconds, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"


def _corridor_delay_per_segment(spec: SynthSpec) -> dict[tuple, dict[TimePeriod, float]]:
    """Undirected street segment -> per-period extra delay in seconds."""
    table: dict[tuple, dict[TimePeriod, float]] = {}
    for corridor in spec.corridors:
        per_edge = corridor.delay_s / max(1, corridor.end - corridor.start)
        for a, b in corridor.segments():
            key = tuple(sorted((a, b)))
            slot = table.setdefault(key, {})
            for period in corridor.periods:
                slot[period] = slot.get(period, 0.0) + per_edge
    return table


def _trip_stop_schedule(
    spec: SynthSpec, route: _Route, forward: bool, depart_s: int, delays: dict
) -> list[tuple[int, int, float]]:
    """Per stop: (stop point index, scheduled seconds, planted delay seconds).

    The planted delay accumulates over corridor segments crossed before the
    stop; a segment counts when its scheduled entry time falls in an affected
    period.
    """
    points = route.points if forward else list(reversed(route.points))
    stop_set = set(route.stop_positions if forward else [len(points) - 1 - p for p in route.stop_positions])
    block_s = spec.spacing_m / spec.speed_mps
    out = []
    delay = 0.0
    for i, point in enumerate(points):
        sched = depart_s + int(round(i * block_s))
        if i in stop_set:
            out.append((i, sched, delay))
        if i < len(points) - 1:
            key = tuple(sorted((point, points[i + 1])))
            slot = delays.get(key)
            if slot:
                period = network.period_of(ingest.Timestamp(_base_date(), sched))
                delay += slot.get(period, 0.0)
    return out


def _base_date() -> dt.date:
    return dt.date.fromisoformat(BASE_DATE)


def generate(spec: SynthSpec, out_dir: str | Path) -> dict:
    """Write GTFS, smart-card CSV, POI GeoJSON and ground-truth JSON.

    Returns a manifest with the generated paths and the ground-truth dict.
    Same spec (including seed) twice produces byte-identical outputs.
    """
    out_dir = Path(out_dir)
    gtfs_dir = out_dir / "gtfs"
    gtfs_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    routes = _routes(spec)
    delays = _corridor_delay_per_segment(spec)

    # Stops: union of grid positions any route stops at.
    stop_points: dict[str, tuple[int, int]] = {}
    for route in routes:
        for pos in route.stop_positions:
            r, c = route.points[pos]
            stop_points[f"S{r:02d}x{c:02d}"] = (r, c)

    with open(gtfs_dir / "stops.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("stop_id,stop_name,stop_lat,stop_lon\n")
        for stop_id in sorted(stop_points):
            r, c = stop_points[stop_id]
            lat, lon = _grid_latlon(spec, r, c)
            fh.write(f"{stop_id},Stop {r}-{c},{lat!r},{lon!r}\n")

    with open(gtfs_dir / "routes.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("route_id,route_short_name\n")
        for route in routes:
            fh.write(f"{route.route_id},{route.route_id}\n")

    with open(gtfs_dir / "shapes.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("shape_id,shape_pt_lat,shape_pt_lon,shape_pt_sequence\n")
        for route in routes:
            for direction, pts in (("F", route.points), ("B", list(reversed(route.points)))):
                for seq, (r, c) in enumerate(pts):
                    lat, lon = _grid_latlon(spec, r, c)
                    fh.write(f"{route.route_id}{direction},{lat!r},{lon!r},{seq}\n")

    # Departures across the whole day so every period gets trips.
    departures = list(range(0, 24 * 60, spec.headway_min))
    trips: list[tuple[str, str, str, bool, int]] = []  # trip_id, route_id, shape_id, forward, depart_s
    for route in routes:
        for depart_min in departures:
            for direction, forward in (("F", True), ("B", False)):
                trip_id = f"{route.route_id}-{direction}-{depart_min:04d}"
                trips.append((trip_id, route.route_id, f"{route.route_id}{direction}", forward, depart_min * 60))

    with open(gtfs_dir / "trips.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("trip_id,route_id,shape_id,service_id\n")
        for trip_id, route_id, shape_id, _, _ in trips:
            fh.write(f"{trip_id},{route_id},{shape_id},daily\n")

    route_by_id = {r.route_id: r for r in routes}
    trip_scheds: dict[str, list[tuple[str, int, float]]] = {}
    with open(gtfs_dir / "stop_times.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("trip_id,stop_id,stop_sequence,arrival_time\n")
        for trip_id, route_id, _, forward, depart_s in trips:
            route = route_by_id[route_id]
            points = route.points if forward else list(reversed(route.points))
            rows = []
            for seq, (pos, sched, delay) in enumerate(
                _trip_stop_schedule(spec, route, forward, depart_s, delays)
            ):
                r, c = points[pos]
                stop_id = f"S{r:02d}x{c:02d}"
                fh.write(f"{trip_id},{stop_id},{seq},{_clock(sched)}\n")
                rows.append((stop_id, sched, delay))
            trip_scheds[trip_id] = rows

    # Smart-card boardings: scheduled time + planted delay + bounded noise.
    card_counter = 0
    smartcard_path = out_dir / "smartcard.csv"
    with open(smartcard_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("card_id,trip_id,boarding_stop_id,boarding_time\n")
        base = _base_date()
        for day in range(spec.n_days):
            date = base.fromordinal(base.toordinal() + day)
            for route in routes:
                trip_ids = [t[0] for t in trips if t[1] == route.route_id]
                stop_ids = sorted(
                    {f"S{r:02d}x{c:02d}" for r, c in (route.points[p] for p in route.stop_positions)}
                )
                for stop_id in stop_ids:
                    serving = [
                        t for t in trip_ids
                        if any(s[0] == stop_id for s in trip_scheds[t])
                    ]
                    for _ in range(spec.boardings_per_stop_per_day):
                        trip_id = serving[int(rng.integers(len(serving)))]
                        sched, delay = next(
                            (s[1], s[2]) for s in trip_scheds[trip_id] if s[0] == stop_id
                        )
                        noise = float(rng.uniform(-spec.noise_s, spec.noise_s))
                        at = max(0, int(round(sched + delay + noise)))
                        card_counter += 1
                        fh.write(
                            f"C{card_counter:06d},{trip_id},{stop_id},"
                            f"{date.isoformat()} {_clock(at)}\n"
                        )

    # POIs: corridor segments carry traffic lights, slightly off-axis.
    features = []
    for corridor in spec.corridors:
        for (a, b) in corridor.segments():
            (lat_a, lon_a) = _grid_latlon(spec, *a)
            (lat_b, lon_b) = _grid_latlon(spec, *b)
            offset_deg = math.degrees(5.0 / geo.EARTH_RADIUS_M)
            n = spec.lights_per_corridor_segment
            for i in range(n):
                t = (i + 1) / (n + 1)
                lat = lat_a + t * (lat_b - lat_a) + (offset_deg if corridor.axis == "row" else 0.0)
                lon = lon_a + t * (lon_b - lon_a) + (offset_deg if corridor.axis == "col" else 0.0)
                features.append(
                    {
                        "type": "Feature",
                        "geometry": {"type": "Point", "coordinates": [lon, lat]},
                        "properties": {"kind": "traffic_light"},
                    }
                )
    for kind in sorted(spec.scattered_pois):
        lat_max, lon_max = _grid_latlon(spec, spec.rows - 1, spec.cols - 1)
        for _ in range(int(spec.scattered_pois[kind])):
            lat = float(rng.uniform(spec.origin_lat, lat_max))
            lon = float(rng.uniform(spec.origin_lon, lon_max))
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [lon, lat]},
                    "properties": {"kind": kind},
                }
            )
    poi_path = out_dir / "pois.geojson"
    poi_path.write_text(
        json.dumps({"type": "FeatureCollection", "features": features}, sort_keys=True),
        encoding="utf-8",
    )

    ground_truth = _ground_truth(spec, gtfs_dir, delays)
    gt_path = out_dir / "ground_truth.json"
    gt_path.write_text(json.dumps(ground_truth, indent=2, sort_keys=True), encoding="utf-8")

    return {
        "gtfs_dir": str(gtfs_dir),
        "smartcard_csv": str(smartcard_path),
        "poi_geojson": str(poi_path),
        "ground_truth": ground_truth,
        "ground_truth_path": str(gt_path),
    }


def _ground_truth(spec: SynthSpec, gtfs_dir: Path, delays: dict) -> dict:
    """Compute, on the actually generated feed, which routes cross a corridor
    and what the best detour costs under the true planted delays."""
    bundle, _ = ingest.parse_gtfs(gtfs_dir)
    graph = network.build_graph(bundle)
    projection = network.project_stops(graph, bundle)
    graph.stop_index.update(projection.mapping)
    specs, excluded = network.derive_route_specs(graph, bundle, projection.mapping)

    # Node -> grid position, then edge -> undirected street segment key.
    proj = graph.projection
    grid_xy = {
        (r, c): proj.to_xy(*_grid_latlon(spec, r, c))
        for r in range(spec.rows)
        for c in range(spec.cols)
    }
    node_grid: dict[int, tuple[int, int]] = {}
    for nid, node in graph.nodes.items():
        nx, ny = proj.to_xy(node.lat, node.lon)
        for pos, (gx, gy) in grid_xy.items():
            if abs(nx - gx) < spec.spacing_m / 4 and abs(ny - gy) < spec.spacing_m / 4:
                node_grid[nid] = pos
                break

    def edge_segment(eid: int) -> tuple | None:
        edge = graph.edges[eid]
        a = node_grid.get(edge.from_node)
        b = node_grid.get(edge.to_node)
        if a is None or b is None or a == b:
            return None
        return tuple(sorted((a, b)))

    def true_weight(eid: int, period: TimePeriod) -> float:
        seg = edge_segment(eid)
        if seg is None:
            return 0.0
        return delays.get(seg, {}).get(period, 0.0)

    routes_doc = {}
    corridor_routes: list[str] = []
    for rspec in specs:
        crosses_periods = set()
        for eid in rspec.original_edges:
            seg = edge_segment(eid)
            if seg is not None and seg in delays:
                crosses_periods.update(delays[seg].keys())
        crosses = bool(crosses_periods)
        if crosses:
            corridor_routes.append(rspec.route_id)
        per_period = {}
        for period in PERIOD_ORDER:
            original = math.fsum(true_weight(eid, period) for eid in rspec.original_edges)
            adjacency: dict[int, list[tuple[int, int, float]]] = {}
            for eid in sorted(graph.edges):
                edge = graph.edges[eid]
                adjacency.setdefault(edge.from_node, []).append(
                    (eid, edge.to_node, true_weight(eid, period))
                )
            best = 0.0
            reachable = True
            for a, b in zip(rspec.stop_nodes, rspec.stop_nodes[1:]):
                if a == b:
                    continue
                dist = dijkstra_distances(adjacency, a)
                if b not in dist:
                    reachable = False
                    break
                best += dist[b]
            per_period[period.value] = {
                "original_true_cost": original,
                "best_true_cost": best if reachable else None,
                "detour_available": reachable and best < original - 1e-9,
            }
        routes_doc[rspec.route_id] = {
            "crosses_corridor": crosses,
            "affected_periods": sorted(p.value for p in crosses_periods),
            "periods": per_period,
        }

    return {
        "spec": spec.to_dict(),
        "corridors": [c.to_dict() for c in spec.corridors],
        "corridor_routes": sorted(corridor_routes),
        "non_corridor_routes": sorted(r.route_id for r in specs if r.route_id not in corridor_routes),
        "excluded_routes": excluded,
        "routes": routes_doc,
    }


@dataclass(frozen=True)
class BruteForceResult:
    edges: tuple[int, ...]
    cost: float


def brute_force_route(
    wgraph: WeightedGraph, stop_nodes: list[int], node_limit: int = 12
) -> BruteForceResult | None:
    """Exhaustive per-leg enumeration of simple paths; the test oracle.

    Minimal concatenated cost with the same lexicographic tie-break as the
    routing engine. Returns None when any leg is unreachable. Rejects graphs
    larger than `node_limit` nodes.
    """
    n_nodes = len(wgraph.network.nodes)
    if n_nodes > node_limit:
        raise ValueError(f"graph has {n_nodes} nodes; brute force limited to {node_limit}")

    def leg_paths(a: int, b: int) -> tuple[tuple[int, ...], float] | None:
        best: tuple[float, tuple[int, ...]] | None = None
        stack: list[tuple[int, list[int], set[int]]] = [(a, [], {a})]
        while stack:
            node, path, visited = stack.pop()
            if node == b:
                cost = math.fsum(wgraph.weights[eid] for eid in path)
                key = (cost, tuple(path))
                if best is None or key < best:
                    best = key
                continue
            for eid, other, _ in wgraph.out_edges(node):
                if other in visited and other != b:
                    continue
                if other == node:
                    continue
                stack.append((other, path + [eid], visited | {other}))
        if best is None:
            return None
        return best[1], best[0]

    edges: list[int] = []
    for a, b in zip(stop_nodes, stop_nodes[1:]):
        if a == b:
            continue
        leg = leg_paths(a, b)
        if leg is None:
            return None
        edges.extend(leg[0])
    return BruteForceResult(
        edges=tuple(edges), cost=math.fsum(wgraph.weights[eid] for eid in edges)
    )
