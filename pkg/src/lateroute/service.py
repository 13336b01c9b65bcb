"""Read-only HTTP service over a built workspace for the planner UI.

All shared state (graph, model, suggestions) is loaded once and never
mutated; what-if computations run per request and write nothing back.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel

from . import optimizer, pipeline
from .model import embedding_coords
from .network import PERIOD_ORDER, TimePeriod
from .optimizer import MAX_REORDER_STOPS, RouteUnreachableError
from .workspace import PipelineConfig, Workspace

API_VERSION = "0.1.0"


class WhatIfRequest(BaseModel):
    route_id: str
    period: str
    remove_stop_index: int


class ReorderRequest(BaseModel):
    route_id: str
    period: str


def _parse_period(name: str) -> TimePeriod:
    try:
        return TimePeriod(name)
    except ValueError:
        raise HTTPException(
            status_code=422,
            detail=f"unknown period {name!r}; expected one of "
            + ", ".join(p.value for p in PERIOD_ORDER),
        )


def create_app(config: PipelineConfig, ui_dir: str | None = None) -> FastAPI:
    ws = Workspace(config)
    graph = pipeline.load_graph(ws)
    model = pipeline.load_model(ws)
    specs = {s.route_id: s for s in pipeline.load_route_specs(ws)}
    suggestions_doc = ws.read_json("suggestions")
    distribution_doc = ws.read_json("distribution")

    by_route_period: dict[tuple[str, str], dict] = {}
    for s in suggestions_doc["suggestions"]:
        by_route_period[(s["route_id"], s["period"])] = s
    route_ids = sorted({rid for rid, _ in by_route_period})

    wgraph_cache: dict[TimePeriod, optimizer.WeightedGraph] = {}

    def wgraph(period: TimePeriod) -> optimizer.WeightedGraph:
        if period not in wgraph_cache:
            wgraph_cache[period] = pipeline.load_weighted_graph(ws, graph, period)
        return wgraph_cache[period]

    app = FastAPI(title="lateroute planner service", version=API_VERSION)

    @app.get("/api/health")
    def health() -> dict:
        return {
            "status": "ok",
            "version": API_VERSION,
            "config_hash": config.config_hash,
            "routes": len(route_ids),
        }

    @app.get("/api/routes")
    def routes() -> dict:
        out = []
        for rid in route_ids:
            periods = {}
            for period in PERIOD_ORDER:
                s = by_route_period.get((rid, period.value))
                if s is not None:
                    periods[period.value] = {
                        "improvement_pct": s["improvement_pct"],
                        "changed": s["changed"],
                    }
            out.append({"route_id": rid, "periods": periods})
        return {"routes": out}

    @app.get("/api/routes/{route_id}")
    def route_detail(route_id: str, period: str = Query("morning")) -> dict:
        p = _parse_period(period)
        s = by_route_period.get((route_id, p.value))
        if s is None:
            raise HTTPException(status_code=404, detail=f"unknown route {route_id!r}")
        return s

    @app.get("/api/distribution")
    def distribution(period: str = Query("morning")) -> dict:
        p = _parse_period(period)
        return {"period": p.value, **distribution_doc["periods"][p.value]}

    @app.get("/api/embedding")
    def embedding() -> dict:
        coords = embedding_coords(model)
        return {
            "points": [
                {"period": p.value, "x": coords[p][0], "y": coords[p][1]}
                for p in PERIOD_ORDER
            ]
        }

    @app.post("/api/whatif")
    def whatif(req: WhatIfRequest) -> dict:
        p = _parse_period(req.period)
        spec = specs.get(req.route_id)
        if spec is None or (req.route_id, p.value) not in by_route_period:
            raise HTTPException(status_code=404, detail=f"unknown route {req.route_id!r}")
        try:
            result = optimizer.whatif_remove_stop(wgraph(p), spec, req.remove_stop_index)
        except ValueError as exc:  # covers RouteUnreachableError too
            raise HTTPException(status_code=422, detail=str(exc))
        return {"route_id": req.route_id, **result.to_json_dict(graph)}

    @app.post("/api/reorder")
    def reorder(req: ReorderRequest) -> dict:
        p = _parse_period(req.period)
        spec = specs.get(req.route_id)
        if spec is None or (req.route_id, p.value) not in by_route_period:
            raise HTTPException(status_code=404, detail=f"unknown route {req.route_id!r}")
        if len(spec.stop_nodes) > MAX_REORDER_STOPS:
            raise HTTPException(
                status_code=422,
                detail=f"route has {len(spec.stop_nodes)} stops; reorder supports at most {MAX_REORDER_STOPS}",
            )
        try:
            result = optimizer.optimal_stop_order(wgraph(p), spec.stop_nodes)
        except (ValueError, RouteUnreachableError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        baseline = by_route_period[(req.route_id, p.value)]["proposed_cost"]
        order_stop_ids = [spec.stop_ids[i] for i in result.order_indices]
        return {
            "route_id": req.route_id,
            "period": p.value,
            "order_stop_ids": order_stop_ids,
            "order_nodes": result.order_nodes,
            "cost": result.cost,
            "baseline_cost": baseline,
        }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
