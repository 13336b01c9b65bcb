"""Directed road-segment graph built from GTFS shapes.

Nodes are places where a vehicle may stop or change course: projected stop
locations, points shared by two or more shape polylines (intersections,
detected on a snapped planar grid) and shape endpoints. Edges are the
directed sub-polylines between consecutive nodes along each shape; trips
riding the same snapped segment share one edge.
"""
from __future__ import annotations

import enum
import json
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path

from . import geo
from .ingest import GtfsBundle, Timestamp

SNAP_GRID_M = 5.0
POI_BUFFER_M = 25.0
STOP_MAX_SNAP_M = 50.0

# Closed-buffer / tolerance slack for float comparisons on meter distances.
_DIST_EPS = 1e-6

ATTRIBUTE_NAMES = (
    "length_m",
    "n_traffic_lights",
    "n_pt_stops",
    "n_petrol_stations",
    "n_public_parking",
    "n_private_parking",
)

_POI_KIND_TO_ATTR = {
    "traffic_light": "n_traffic_lights",
    "pt_stop": "n_pt_stops",
    "petrol_station": "n_petrol_stations",
    "public_parking": "n_public_parking",
    "private_parking": "n_private_parking",
}


class TimePeriod(enum.Enum):
    MORNING = "morning"
    NOON = "noon"
    AFTERNOON = "afternoon"
    EVENING = "evening"
    NIGHT = "night"


PERIOD_ORDER = (
    TimePeriod.MORNING,
    TimePeriod.NOON,
    TimePeriod.AFTERNOON,
    TimePeriod.EVENING,
    TimePeriod.NIGHT,
)


def period_of(ts: Timestamp) -> TimePeriod:
    """Map a timestamp to its part of day (half-open clock brackets)."""
    s = ts.clock_seconds()
    h = s / 3600.0
    if 6.0 <= h < 10.0:
        return TimePeriod.MORNING
    if 10.0 <= h < 14.0:
        return TimePeriod.NOON
    if 14.0 <= h < 18.0:
        return TimePeriod.AFTERNOON
    if 18.0 <= h < 23.0:
        return TimePeriod.EVENING
    return TimePeriod.NIGHT


@dataclass(frozen=True)
class Node:
    node_id: int
    lat: float
    lon: float
    is_stop: bool
    is_intersection: bool


@dataclass(frozen=True)
class Edge:
    edge_id: int
    from_node: int
    to_node: int
    polyline: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class SegmentAttributes:
    length_m: float
    n_traffic_lights: int = 0
    n_pt_stops: int = 0
    n_petrol_stations: int = 0
    n_public_parking: int = 0
    n_private_parking: int = 0

    def as_vector(self) -> tuple[float, ...]:
        return (
            self.length_m,
            float(self.n_traffic_lights),
            float(self.n_pt_stops),
            float(self.n_petrol_stations),
            float(self.n_public_parking),
            float(self.n_private_parking),
        )

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in ATTRIBUTE_NAMES}


@dataclass
class RoadNetwork:
    """Immutable-by-convention directed road graph with per-edge attributes."""

    nodes: dict[int, Node]
    edges: dict[int, Edge]
    attrs: dict[int, SegmentAttributes]
    stop_index: dict[str, int]
    shape_paths: dict[str, list[int]]
    projection: geo.LocalProjection

    def out_edges(self) -> dict[int, list[Edge]]:
        adj: dict[int, list[Edge]] = defaultdict(list)
        for edge in self.edges.values():
            adj[edge.from_node].append(edge)
        for lst in adj.values():
            lst.sort(key=lambda e: e.edge_id)
        return dict(adj)

    def to_json_dict(self) -> dict:
        return {
            "projection": {"lat0": self.projection.lat0, "lon0": self.projection.lon0},
            "nodes": [
                {
                    "id": n.node_id,
                    "lat": n.lat,
                    "lon": n.lon,
                    "is_stop": n.is_stop,
                    "is_intersection": n.is_intersection,
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.node_id)
            ],
            "edges": [
                {
                    "id": e.edge_id,
                    "from": e.from_node,
                    "to": e.to_node,
                    "polyline": [[lat, lon] for lat, lon in e.polyline],
                    "attrs": self.attrs[e.edge_id].as_dict() if e.edge_id in self.attrs else None,
                }
                for e in sorted(self.edges.values(), key=lambda e: e.edge_id)
            ],
            "stop_index": dict(sorted(self.stop_index.items())),
            "shape_paths": {k: v for k, v in sorted(self.shape_paths.items())},
        }

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RoadNetwork":
        nodes = {
            n["id"]: Node(n["id"], n["lat"], n["lon"], n["is_stop"], n["is_intersection"])
            for n in doc["nodes"]
        }
        edges = {}
        attrs = {}
        for e in doc["edges"]:
            edges[e["id"]] = Edge(
                e["id"], e["from"], e["to"], tuple((p[0], p[1]) for p in e["polyline"])
            )
            if e.get("attrs") is not None:
                attrs[e["id"]] = SegmentAttributes(**e["attrs"])
        proj = geo.LocalProjection(doc["projection"]["lat0"], doc["projection"]["lon0"])
        return cls(
            nodes=nodes,
            edges=edges,
            attrs=attrs,
            stop_index={k: int(v) for k, v in doc["stop_index"].items()},
            shape_paths={k: list(v) for k, v in doc["shape_paths"].items()},
            projection=proj,
        )

    @classmethod
    def load_json(cls, path: str | Path) -> "RoadNetwork":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def path_geojson(self, edge_ids: list[int]) -> dict:
        """GeoJSON LineString feature for a connected edge path."""
        coords: list[list[float]] = []
        for eid in edge_ids:
            for lat, lon in self.edges[eid].polyline:
                pt = [lon, lat]
                if coords and coords[-1] == pt:
                    continue
                coords.append(pt)
        return {
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {"edge_ids": list(edge_ids)},
        }


def _snap_cell(x: float, y: float, grid_m: float) -> tuple[int, int]:
    return (int(round(x / grid_m)), int(round(y / grid_m)))


@dataclass
class _Split:
    """A node-to-be on a shape: arc position plus exact planar point."""

    arc_pos: float
    x: float
    y: float
    cell: tuple[int, int]
    is_stop: bool


def build_graph(gtfs: GtfsBundle, snap_grid_m: float = SNAP_GRID_M) -> RoadNetwork:
    """Decompose GTFS shape polylines into a directed graph.

    Node sites: stop projections, snapped points shared by >= 2 distinct
    shapes, and shape endpoints. Edge geometry keeps the exact (unsnapped)
    split points so decomposed lengths add up to the original polyline.
    """
    shapes = {sid: pts for sid, pts in gtfs.shapes.items() if len(pts) >= 2}
    if not shapes:
        raise ValueError("GTFS bundle contains no usable shape")

    all_pts = [p for pts in shapes.values() for p in pts]
    lat0 = sum(p[0] for p in all_pts) / len(all_pts)
    lon0 = sum(p[1] for p in all_pts) / len(all_pts)
    proj = geo.LocalProjection(lat0, lon0)

    shape_xy: dict[str, list[tuple[float, float]]] = {
        sid: [proj.to_xy(lat, lon) for lat, lon in pts] for sid, pts in shapes.items()
    }

    # Intersections: snapped vertex cells touched by >= 2 distinct shapes.
    cell_shapes: dict[tuple[int, int], set[str]] = defaultdict(set)
    for sid, pts in shape_xy.items():
        for x, y in pts:
            cell_shapes[_snap_cell(x, y, snap_grid_m)].add(sid)
    intersection_cells = {c for c, sids in cell_shapes.items() if len(sids) >= 2}

    # Stops used by each shape (via its trips' stop_times).
    sts_by_trip = gtfs.stop_times_by_trip()
    shape_stops: dict[str, set[str]] = defaultdict(set)
    for trip_id, sts in sts_by_trip.items():
        trip = gtfs.trips.get(trip_id)
        if trip is None or trip.shape_id not in shapes:
            continue
        for st in sts:
            shape_stops[trip.shape_id].add(st.stop_id)

    # Collect split points per shape.
    shape_splits: dict[str, list[_Split]] = {}
    for sid, pts in shape_xy.items():
        arc = [0.0]
        for (ax, ay), (bx, by) in zip(pts, pts[1:]):
            arc.append(arc[-1] + ((bx - ax) ** 2 + (by - ay) ** 2) ** 0.5)
        splits: list[_Split] = []

        def add_split(pos: float, x: float, y: float, is_stop: bool) -> None:
            splits.append(_Split(pos, x, y, _snap_cell(x, y, snap_grid_m), is_stop))

        for i, (x, y) in enumerate(pts):
            cell = _snap_cell(x, y, snap_grid_m)
            if i == 0 or i == len(pts) - 1 or cell in intersection_cells:
                add_split(arc[i], x, y, False)

        for stop_id in sorted(shape_stops.get(sid, ())):
            stop = gtfs.stops[stop_id]
            sx, sy = proj.to_xy(stop.lat, stop.lon)
            best: tuple[float, float, float, float] | None = None  # (dist, pos, qx, qy)
            for i, ((ax, ay), (bx, by)) in enumerate(zip(pts, pts[1:])):
                t, qx, qy, d = geo.project_point_to_segment(sx, sy, ax, ay, bx, by)
                pos = arc[i] + t * (arc[i + 1] - arc[i])
                if best is None or d < best[0] - 1e-12:
                    best = (d, pos, qx, qy)
            if best is not None:
                add_split(best[1], best[2], best[3], True)

        splits.sort(key=lambda s: s.arc_pos)
        # Merge splits landing in the same cell consecutively (e.g. a stop
        # projected onto an intersection vertex).
        merged: list[_Split] = []
        for s in splits:
            if merged and merged[-1].cell == s.cell:
                merged[-1].is_stop = merged[-1].is_stop or s.is_stop
                continue
            merged.append(s)
        shape_splits[sid] = merged

    # Node identity is the snapped cell; position is the snapped coordinate.
    cell_is_stop: dict[tuple[int, int], bool] = defaultdict(bool)
    for splits in shape_splits.values():
        for s in splits:
            cell_is_stop[s.cell] = cell_is_stop[s.cell] or s.is_stop
    cells = sorted(cell_is_stop)
    node_id_of_cell = {cell: i for i, cell in enumerate(cells)}
    nodes: dict[int, Node] = {}
    for cell, nid in node_id_of_cell.items():
        lat, lon = proj.to_latlon(cell[0] * snap_grid_m, cell[1] * snap_grid_m)
        nodes[nid] = Node(
            node_id=nid,
            lat=lat,
            lon=lon,
            is_stop=cell_is_stop[cell],
            is_intersection=cell in intersection_cells,
        )

    # Edges: consecutive splits along each shape, deduplicated on
    # (from, to, rounded polyline).
    def sub_polyline(sid: str, a: _Split, b: _Split) -> tuple[tuple[float, float], ...]:
        pts = shapes[sid]
        xy = shape_xy[sid]
        arc = [0.0]
        for (ax, ay), (bx, by) in zip(xy, xy[1:]):
            arc.append(arc[-1] + ((bx - ax) ** 2 + (by - ay) ** 2) ** 0.5)
        coords: list[tuple[float, float]] = [proj.to_latlon(a.x, a.y)]
        for i in range(len(pts)):
            if a.arc_pos < arc[i] < b.arc_pos:
                coords.append(pts[i])
        coords.append(proj.to_latlon(b.x, b.y))
        # Collapse numerically identical consecutive points.
        out = [coords[0]]
        for p in coords[1:]:
            if abs(p[0] - out[-1][0]) > 1e-12 or abs(p[1] - out[-1][1]) > 1e-12:
                out.append(p)
        if len(out) == 1:
            out.append(coords[-1])
        return tuple(out)

    def poly_key(poly: tuple[tuple[float, float], ...]) -> tuple:
        return tuple((round(lat, 9), round(lon, 9)) for lat, lon in poly)

    pending: dict[tuple, tuple[int, int, tuple]] = {}
    shape_edge_keys: dict[str, list[tuple]] = {}
    for sid, splits in shape_splits.items():
        keys: list[tuple] = []
        for a, b in zip(splits, splits[1:]):
            u = node_id_of_cell[a.cell]
            v = node_id_of_cell[b.cell]
            poly = sub_polyline(sid, a, b)
            key = (u, v, poly_key(poly))
            if key not in pending:
                pending[key] = (u, v, poly)
            keys.append(key)
        shape_edge_keys[sid] = keys

    edge_id_of_key = {key: i for i, key in enumerate(sorted(pending))}
    edges: dict[int, Edge] = {}
    for key, (u, v, poly) in pending.items():
        eid = edge_id_of_key[key]
        edges[eid] = Edge(edge_id=eid, from_node=u, to_node=v, polyline=poly)

    shape_paths = {
        sid: [edge_id_of_key[k] for k in keys] for sid, keys in shape_edge_keys.items()
    }

    return RoadNetwork(
        nodes=nodes,
        edges=edges,
        attrs={},
        stop_index={},
        shape_paths=shape_paths,
        projection=proj,
    )


def assign_attributes(
    graph: RoadNetwork, pois, buffer_m: float = POI_BUFFER_M
) -> RoadNetwork:
    """Compute geodesic edge lengths and POI counts within a closed buffer.

    Returns a copy of the graph with only `attrs` replaced; a POI may count
    toward several edges.
    """
    proj = graph.projection
    poi_xy = {
        kind: [proj.to_xy(lat, lon) for lat, lon in pois.bucket(kind)]
        for kind in _POI_KIND_TO_ATTR
    }
    attrs: dict[int, SegmentAttributes] = {}
    for eid in sorted(graph.edges):
        edge = graph.edges[eid]
        length = geo.polyline_length_m(list(edge.polyline))
        line_xy = [proj.to_xy(lat, lon) for lat, lon in edge.polyline]
        counts = {}
        for kind, attr_name in _POI_KIND_TO_ATTR.items():
            n = 0
            for px, py in poi_xy[kind]:
                if geo.point_polyline_distance(px, py, line_xy) <= buffer_m + _DIST_EPS:
                    n += 1
            counts[attr_name] = n
        attrs[eid] = SegmentAttributes(length_m=length, **counts)
    return replace(graph, attrs=attrs)


@dataclass
class StopProjection:
    mapping: dict[str, int]
    unmapped: list[str]


def project_stops(
    graph: RoadNetwork, gtfs: GtfsBundle, max_snap_m: float = STOP_MAX_SNAP_M
) -> StopProjection:
    """Map every stop used by a trip to its nearest node within `max_snap_m`.

    Equidistant candidates resolve to the lower node id; stops beyond the
    threshold are reported unmapped.
    """
    used_stops = sorted({st.stop_id for st in gtfs.stop_times})
    proj = graph.projection
    node_xy = [
        (nid, proj.to_xy(graph.nodes[nid].lat, graph.nodes[nid].lon))
        for nid in sorted(graph.nodes)
    ]
    mapping: dict[str, int] = {}
    unmapped: list[str] = []
    for stop_id in used_stops:
        stop = gtfs.stops.get(stop_id)
        if stop is None:
            unmapped.append(stop_id)
            continue
        sx, sy = proj.to_xy(stop.lat, stop.lon)
        best_id = None
        best_d = None
        for nid, (nx, ny) in node_xy:
            d = ((sx - nx) ** 2 + (sy - ny) ** 2) ** 0.5
            if best_d is None or d < best_d:
                best_d = d
                best_id = nid
        if best_d is not None and best_d <= max_snap_m + _DIST_EPS:
            mapping[stop_id] = best_id
        else:
            unmapped.append(stop_id)
    return StopProjection(mapping=mapping, unmapped=unmapped)


@dataclass
class RouteSpec:
    """One route's optimizable description: representative trip, ordered stop
    nodes and the original edge path between first and last stop."""

    route_id: str
    trip_id: str
    shape_id: str
    stop_ids: list[str]
    stop_nodes: list[int]
    original_edges: list[int]


def derive_route_specs(
    graph: RoadNetwork, gtfs: GtfsBundle, stop_map: dict[str, int]
) -> tuple[list[RouteSpec], list[dict]]:
    """Build a RouteSpec per route from its representative trip.

    The representative trip is the one with the most stop_times (ties go to
    the smallest trip id). Routes whose stops cannot be mapped, or whose stop
    nodes do not lie on the trip's shape chain in order, are excluded with a
    diagnostic.
    """
    sts_by_trip = gtfs.stop_times_by_trip()
    trips_by_route: dict[str, list[str]] = defaultdict(list)
    for tid, trip in gtfs.trips.items():
        if tid in sts_by_trip and trip.shape_id in graph.shape_paths:
            trips_by_route[trip.route_id].append(tid)

    specs: list[RouteSpec] = []
    excluded: list[dict] = []
    for route_id in sorted(trips_by_route):
        trip_id = min(trips_by_route[route_id], key=lambda t: (-len(sts_by_trip[t]), t))
        trip = gtfs.trips[trip_id]
        stop_ids = [st.stop_id for st in sts_by_trip[trip_id]]

        missing = [s for s in stop_ids if s not in stop_map]
        if missing:
            excluded.append(
                {"route_id": route_id, "reason": f"unmapped stops: {', '.join(missing)}"}
            )
            continue
        stop_nodes = [stop_map[s] for s in stop_ids]

        chain = graph.shape_paths[trip.shape_id]
        chain_nodes = [graph.edges[chain[0]].from_node] + [
            graph.edges[eid].to_node for eid in chain
        ]
        positions: list[int] = []
        start = 0
        ok = True
        for node in stop_nodes:
            pos = None
            for i in range(start, len(chain_nodes)):
                if chain_nodes[i] == node:
                    pos = i
                    break
            if pos is None:
                ok = False
                break
            positions.append(pos)
            start = pos
        if not ok or not positions:
            excluded.append(
                {"route_id": route_id, "reason": "stop nodes not on shape chain in order"}
            )
            continue
        original_edges = chain[positions[0] : positions[-1]]
        specs.append(
            RouteSpec(
                route_id=route_id,
                trip_id=trip_id,
                shape_id=trip.shape_id,
                stop_ids=stop_ids,
                stop_nodes=stop_nodes,
                original_edges=original_edges,
            )
        )
    return specs, excluded
