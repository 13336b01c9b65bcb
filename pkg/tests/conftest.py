"""Shared fixture helpers: tiny hand-built GTFS feeds and graph builders."""
from __future__ import annotations

from pathlib import Path

import pytest

from lateroute.network import (
    Edge,
    Node,
    RoadNetwork,
    SegmentAttributes,
)
from lateroute import geo


def write_gtfs(
    directory: Path,
    stops: list[tuple[str, float, float]],
    routes: list[str],
    trips: list[tuple[str, str, str]],
    stop_times: list[tuple[str, str, int, str]],
    shapes: dict[str, list[tuple[float, float]]],
) -> Path:
    """Write a minimal GTFS feed. stops: (id, lat, lon); trips:
    (trip_id, route_id, shape_id); stop_times: (trip_id, stop_id, seq, hh:mm:ss)."""
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "stops.txt", "w", encoding="utf-8") as fh:
        fh.write("stop_id,stop_name,stop_lat,stop_lon\n")
        for sid, lat, lon in stops:
            fh.write(f"{sid},{sid},{lat!r},{lon!r}\n")
    with open(directory / "routes.txt", "w", encoding="utf-8") as fh:
        fh.write("route_id,route_short_name\n")
        for rid in routes:
            fh.write(f"{rid},{rid}\n")
    with open(directory / "trips.txt", "w", encoding="utf-8") as fh:
        fh.write("trip_id,route_id,shape_id,service_id\n")
        for tid, rid, sid in trips:
            fh.write(f"{tid},{rid},{sid},daily\n")
    with open(directory / "stop_times.txt", "w", encoding="utf-8") as fh:
        fh.write("trip_id,stop_id,stop_sequence,arrival_time\n")
        for tid, sid, seq, arr in stop_times:
            fh.write(f"{tid},{sid},{seq},{arr}\n")
    with open(directory / "shapes.txt", "w", encoding="utf-8") as fh:
        fh.write("shape_id,shape_pt_lat,shape_pt_lon,shape_pt_sequence\n")
        for shape_id, pts in shapes.items():
            for i, (lat, lon) in enumerate(pts):
                fh.write(f"{shape_id},{lat!r},{lon!r},{i}\n")
    return directory


def make_network(
    node_coords: dict[int, tuple[float, float]],
    edge_list: list[tuple[int, int, int]],
    lengths: dict[int, float] | None = None,
    attrs: dict[int, SegmentAttributes] | None = None,
) -> RoadNetwork:
    """Hand-built RoadNetwork: node_coords maps id -> (lat, lon); edge_list
    holds (edge_id, from, to)."""
    nodes = {
        nid: Node(nid, lat, lon, is_stop=True, is_intersection=False)
        for nid, (lat, lon) in node_coords.items()
    }
    edges = {}
    net_attrs = {}
    for eid, u, v in edge_list:
        poly = (
            (node_coords[u][0], node_coords[u][1]),
            (node_coords[v][0], node_coords[v][1]),
        )
        edges[eid] = Edge(edge_id=eid, from_node=u, to_node=v, polyline=poly)
        if attrs and eid in attrs:
            net_attrs[eid] = attrs[eid]
        else:
            length = (lengths or {}).get(eid, geo.polyline_length_m(list(poly)))
            net_attrs[eid] = SegmentAttributes(length_m=length)
    lat0 = sum(c[0] for c in node_coords.values()) / len(node_coords)
    lon0 = sum(c[1] for c in node_coords.values()) / len(node_coords)
    return RoadNetwork(
        nodes=nodes,
        edges=edges,
        attrs=net_attrs,
        stop_index={},
        shape_paths={},
        projection=geo.LocalProjection(lat0, lon0),
    )


@pytest.fixture
def tmp_gtfs_dir(tmp_path: Path) -> Path:
    return tmp_path / "gtfs"


def run_pipeline(root: Path, config_doc: dict):
    """Run the full pipeline in-process; returns the loaded config."""
    import json

    from lateroute.pipeline import run_all
    from lateroute.workspace import load_config

    config_path = root / "config.json"
    config_path.write_text(json.dumps(config_doc))
    config = load_config(config_path)
    run_all(config)
    return config
