"""Per-period weighted graphs and constrained shortest-path route proposals.

Routes keep their stop set and order; only the road path between consecutive
stops may change. Proposals are per-leg shortest paths on the predicted
lateness weights, with a deterministic tie-break: among equal-cost paths the
lexicographically smallest edge-id sequence wins. Path costs are summed with
math.fsum so the per-leg optimality guarantee survives float rounding.
"""
from __future__ import annotations

import heapq
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace

import numpy as np

from .model import LatenessModel, predict_batch
from .network import (
    ATTRIBUTE_NAMES,
    PERIOD_ORDER,
    RoadNetwork,
    RouteSpec,
    TimePeriod,
)


class RouteUnreachableError(ValueError):
    """A leg of the stop sequence has no directed path."""


@dataclass
class WeightedGraph:
    """A road network frozen with one period's predicted-lateness weights."""

    network: RoadNetwork
    period: TimePeriod
    weights: dict[int, float]
    _adj: dict[int, list[tuple[int, int, float]]] = field(init=False, repr=False)
    _radj: dict[int, list[tuple[int, int, float]]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        missing = [eid for eid in self.network.edges if eid not in self.weights]
        if missing:
            raise ValueError(f"edges without weights: {missing[:5]}")
        adj: dict[int, list[tuple[int, int, float]]] = defaultdict(list)
        radj: dict[int, list[tuple[int, int, float]]] = defaultdict(list)
        for eid in sorted(self.network.edges):
            edge = self.network.edges[eid]
            w = self.weights[eid]
            adj[edge.from_node].append((eid, edge.to_node, w))
            radj[edge.to_node].append((eid, edge.from_node, w))
        self._adj = dict(adj)
        self._radj = dict(radj)

    def out_edges(self, node: int) -> list[tuple[int, int, float]]:
        return self._adj.get(node, [])

    def in_edges(self, node: int) -> list[tuple[int, int, float]]:
        return self._radj.get(node, [])

    def path_cost(self, edge_ids: list[int]) -> float:
        return math.fsum(self.weights[eid] for eid in edge_ids)


def weigh_graph(graph: RoadNetwork, model: LatenessModel, period: TimePeriod) -> WeightedGraph:
    """Predict a weight for every edge of the attributed graph."""
    edge_ids = sorted(graph.edges)
    rows = np.array([graph.attrs[eid].as_vector() for eid in edge_ids], dtype=np.float64)
    preds = predict_batch(model, rows, period)
    return WeightedGraph(
        network=graph,
        period=period,
        weights={eid: float(w) for eid, w in zip(edge_ids, preds)},
    )


@dataclass(frozen=True)
class PathResult:
    edges: tuple[int, ...]
    cost: float


def dijkstra_distances(
    adjacency: dict[int, list[tuple[int, int, float]]], source: int
) -> dict[int, float]:
    """Plain Dijkstra distance map over an adjacency of (edge, other, weight)."""
    dist: dict[int, float] = {}
    heap: list[tuple[float, int]] = [(0.0, source)]
    while heap:
        d, node = heapq.heappop(heap)
        if node in dist:
            continue
        dist[node] = d
        for _, other, w in adjacency.get(node, []):
            if other not in dist:
                heapq.heappush(heap, (d + w, other))
    return dist


def shortest_path(wgraph: WeightedGraph, u: int, v: int) -> PathResult | None:
    """Minimum-weight directed path from u to v, or None when unreachable.

    Among equal-cost paths the lexicographically smallest edge-id sequence is
    returned: after computing costs-to-target, the walk greedily takes the
    smallest edge id that still lies on an optimal path. Strictly positive
    weights guarantee termination.
    """
    nodes = wgraph.network.nodes
    if u not in nodes or v not in nodes:
        raise KeyError(f"unknown node in shortest_path: {u if u not in nodes else v}")
    if u == v:
        return PathResult(edges=(), cost=0.0)

    dist_to_target = dijkstra_distances(wgraph._radj, v)
    if u not in dist_to_target:
        return None

    edges: list[int] = []
    node = u
    while node != v:
        remaining = dist_to_target[node]
        chosen = None
        for eid, other, w in wgraph.out_edges(node):
            if other in dist_to_target and w + dist_to_target[other] == remaining:
                chosen = (eid, other)
                break  # out_edges sorted by edge id: first hit is the smallest
        if chosen is None:
            # Exact float equality failed; fall back to the best successor.
            best = None
            for eid, other, w in wgraph.out_edges(node):
                if other not in dist_to_target:
                    continue
                cand = w + dist_to_target[other]
                if best is None or cand < best[0]:
                    best = (cand, eid, other)
            if best is None:
                return None
            chosen = (best[1], best[2])
        edges.append(chosen[0])
        node = chosen[1]
    return PathResult(edges=tuple(edges), cost=wgraph.path_cost(edges))


def _attribute_totals(graph: RoadNetwork, edge_ids: list[int]) -> dict[str, float]:
    totals = {name: 0.0 for name in ATTRIBUTE_NAMES}
    for eid in edge_ids:
        for name, value in zip(ATTRIBUTE_NAMES, graph.attrs[eid].as_vector()):
            totals[name] += value
    totals["length_m"] = round(totals["length_m"], 6)
    for name in ATTRIBUTE_NAMES[1:]:
        totals[name] = int(totals[name])
    return totals


@dataclass
class RouteSuggestion:
    route_id: str
    period: TimePeriod
    stop_ids: list[str]
    stop_nodes: list[int]
    original_edges: list[int]
    proposed_edges: list[int]
    original_cost: float
    proposed_cost: float
    improvement_pct: float
    changed: bool
    attribute_comparison: dict[str, dict[str, float]]

    def to_json_dict(self, graph: RoadNetwork | None = None) -> dict:
        doc = {
            "route_id": self.route_id,
            "period": self.period.value,
            "stop_ids": list(self.stop_ids),
            "stop_nodes": list(self.stop_nodes),
            "original_edges": list(self.original_edges),
            "proposed_edges": list(self.proposed_edges),
            "original_cost": self.original_cost,
            "proposed_cost": self.proposed_cost,
            "improvement_pct": self.improvement_pct,
            "changed": self.changed,
            "attribute_comparison": self.attribute_comparison,
        }
        if graph is not None:
            doc["original_geometry"] = graph.path_geojson(self.original_edges)["geometry"]
            doc["proposed_geometry"] = graph.path_geojson(self.proposed_edges)["geometry"]
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RouteSuggestion":
        return cls(
            route_id=doc["route_id"],
            period=TimePeriod(doc["period"]),
            stop_ids=list(doc["stop_ids"]),
            stop_nodes=list(doc["stop_nodes"]),
            original_edges=list(doc["original_edges"]),
            proposed_edges=list(doc["proposed_edges"]),
            original_cost=doc["original_cost"],
            proposed_cost=doc["proposed_cost"],
            improvement_pct=doc["improvement_pct"],
            changed=doc["changed"],
            attribute_comparison=doc["attribute_comparison"],
        )


def suggest_route(wgraph: WeightedGraph, spec: RouteSpec) -> RouteSuggestion:
    """Propose the per-leg shortest route through the fixed stop sequence.

    Raises RouteUnreachableError when any leg has no directed path.
    """
    legs: list[int] = []
    for a, b in zip(spec.stop_nodes, spec.stop_nodes[1:]):
        if a == b:
            continue
        leg = shortest_path(wgraph, a, b)
        if leg is None:
            raise RouteUnreachableError(
                f"route {spec.route_id}: no path between stop nodes {a} and {b}"
            )
        legs.extend(leg.edges)

    original_cost = wgraph.path_cost(spec.original_edges)
    changed = list(legs) != list(spec.original_edges)
    proposed_cost = wgraph.path_cost(legs) if changed else original_cost
    improvement = 0.0
    if changed and original_cost > 0.0:
        improvement = 100.0 * (original_cost - proposed_cost) / original_cost
    graph = wgraph.network
    return RouteSuggestion(
        route_id=spec.route_id,
        period=wgraph.period,
        stop_ids=list(spec.stop_ids),
        stop_nodes=list(spec.stop_nodes),
        original_edges=list(spec.original_edges),
        proposed_edges=list(legs),
        original_cost=original_cost,
        proposed_cost=proposed_cost,
        improvement_pct=improvement,
        changed=changed,
        attribute_comparison={
            "original": _attribute_totals(graph, list(spec.original_edges)),
            "proposed": _attribute_totals(graph, list(legs)),
        },
    )


def suggest_all(
    wgraphs: dict[TimePeriod, WeightedGraph], specs: list[RouteSpec]
) -> tuple[list[RouteSuggestion], list[dict]]:
    """Suggestions for every (route, period), assembled in deterministic order."""
    suggestions: list[RouteSuggestion] = []
    excluded: list[dict] = []
    for spec in sorted(specs, key=lambda s: s.route_id):
        for period in PERIOD_ORDER:
            wg = wgraphs[period]
            try:
                suggestions.append(suggest_route(wg, spec))
            except RouteUnreachableError as exc:
                excluded.append(
                    {"route_id": spec.route_id, "period": period.value, "reason": str(exc)}
                )
    return suggestions, excluded


def nearest_rank_percentile(values: list[float], pct: float) -> float:
    """Nearest-rank percentile (1-based ceil rank) over the given values."""
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = math.ceil(pct / 100.0 * len(ordered))
    rank = min(max(rank, 1), len(ordered))
    return ordered[rank - 1]


@dataclass
class ImprovementDistribution:
    """Per-period ranked improvements, summary percentiles and 1%-wide bins."""

    periods: dict[TimePeriod, dict]

    def to_json_dict(self) -> dict:
        return {
            "periods": {
                period.value: self.periods[period] for period in PERIOD_ORDER if period in self.periods
            }
        }


def rank_routes(suggestions: list[RouteSuggestion]) -> ImprovementDistribution:
    """Rank improvements per period with nearest-rank percentiles."""
    by_period: dict[TimePeriod, list[RouteSuggestion]] = defaultdict(list)
    for s in suggestions:
        by_period[s.period].append(s)
    out: dict[TimePeriod, dict] = {}
    for period in PERIOD_ORDER:
        subs = by_period.get(period, [])
        entries = sorted(subs, key=lambda s: (-s.improvement_pct, s.route_id))
        values = [s.improvement_pct for s in subs]
        bins = [0] * 101
        for v in values:
            bins[min(100, int(v))] += 1
        out[period] = {
            "routes": [
                {
                    "route_id": s.route_id,
                    "improvement_pct": s.improvement_pct,
                    "changed": s.changed,
                }
                for s in entries
            ],
            "percentiles": {
                str(p): nearest_rank_percentile(values, p) for p in (50, 75, 90, 95)
            },
            "changed_fraction": (
                sum(1 for s in subs if s.changed) / len(subs) if subs else 0.0
            ),
            "histogram": {
                "bin_width_pct": 1,
                "bins": [
                    {"lo": i, "hi": i + 1, "count": bins[i]} for i in range(len(bins))
                ],
            },
        }
    return ImprovementDistribution(periods=out)


@dataclass
class WhatIfResult:
    suggestion: RouteSuggestion
    baseline_proposed_cost: float
    cost_delta: float

    def to_json_dict(self, graph: RoadNetwork | None = None) -> dict:
        return {
            "suggestion": self.suggestion.to_json_dict(graph),
            "baseline_proposed_cost": self.baseline_proposed_cost,
            "cost_delta": self.cost_delta,
        }


def whatif_remove_stop(
    wgraph: WeightedGraph, spec: RouteSpec, stop_index: int
) -> WhatIfResult:
    """Recompute the proposal with one interior stop removed.

    The cost delta is the saving relative to the full-sequence proposal;
    endpoints cannot be removed.
    """
    last = len(spec.stop_nodes) - 1
    if not 0 < stop_index < last:
        raise ValueError(
            f"stop_index must be strictly between 0 and {last}; got {stop_index}"
        )
    baseline = suggest_route(wgraph, spec)
    reduced = replace(
        spec,
        stop_ids=[s for i, s in enumerate(spec.stop_ids) if i != stop_index],
        stop_nodes=[n for i, n in enumerate(spec.stop_nodes) if i != stop_index],
    )
    suggestion = suggest_route(wgraph, reduced)
    return WhatIfResult(
        suggestion=suggestion,
        baseline_proposed_cost=baseline.proposed_cost,
        cost_delta=baseline.proposed_cost - suggestion.proposed_cost,
    )


@dataclass
class StopOrderResult:
    order_nodes: list[int]
    order_indices: list[int]
    cost: float


MAX_REORDER_STOPS = 8


def optimal_stop_order(wgraph: WeightedGraph, stops: list[int]) -> StopOrderResult:
    """Exhaustive open-path ordering of the interior stops (endpoints fixed).

    Rejects more than 8 stops (factorial blow-up); ties resolve to the
    lexicographically smallest index permutation.
    """
    k = len(stops)
    if k < 3:
        raise ValueError(f"need at least 3 stops to reorder; got {k}")
    if k > MAX_REORDER_STOPS:
        raise ValueError(f"at most {MAX_REORDER_STOPS} stops supported; got {k}")

    dist_from: dict[int, dict[int, float]] = {}
    for node in dict.fromkeys(stops):
        dist_from[node] = dijkstra_distances(wgraph._adj, node)

    def leg_cost(a: int, b: int) -> float:
        if a == b:
            return 0.0
        return dist_from[a].get(b, math.inf)

    best: tuple[float, tuple[int, ...]] | None = None
    for perm in itertools.permutations(range(1, k - 1)):
        indices = (0, *perm, k - 1)
        cost = 0.0
        feasible = True
        for i, j in zip(indices, indices[1:]):
            c = leg_cost(stops[i], stops[j])
            if math.isinf(c):
                feasible = False
                break
            cost += c
        if not feasible:
            continue
        if best is None or cost < best[0]:
            best = (cost, indices)
    if best is None:
        raise RouteUnreachableError("no feasible ordering: some legs are unreachable")
    order = list(best[1])
    # Recompute the cost via materialized legs so it is an fsum over edges.
    edges: list[int] = []
    for i, j in zip(order, order[1:]):
        leg = shortest_path(wgraph, stops[i], stops[j])
        if leg is None:
            raise RouteUnreachableError("no feasible ordering: some legs are unreachable")
        edges.extend(leg.edges)
    return StopOrderResult(
        order_nodes=[stops[i] for i in order],
        order_indices=order,
        cost=wgraph.path_cost(edges),
    )
