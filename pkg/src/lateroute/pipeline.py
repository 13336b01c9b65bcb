"""Stage implementations behind the CLI: each stage reads its dependencies
from the workspace and writes its own artifacts."""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

from . import ingest, labeling, model as model_mod, network, optimizer, synth
from .network import PERIOD_ORDER, RoadNetwork, RouteSpec, TimePeriod
from .workspace import PipelineConfig, Workspace

logger = logging.getLogger(__name__)

STAGE_ORDER = ["synth", "ingest", "build-graph", "label", "train", "weigh", "suggest", "rank"]


def run_stage(config: PipelineConfig, stage: str) -> None:
    {
        "synth": run_synth,
        "ingest": run_ingest,
        "build-graph": run_build_graph,
        "label": run_label,
        "train": run_train,
        "weigh": run_weigh,
        "suggest": run_suggest,
        "rank": run_rank,
    }[stage](config)


def run_all(config: PipelineConfig) -> None:
    stages = STAGE_ORDER if config.synth else STAGE_ORDER[1:]
    for stage in stages:
        logger.info("running stage %s", stage)
        run_stage(config, stage)


def run_synth(config: PipelineConfig) -> None:
    if not config.synth:
        raise ValueError("config has no 'synth' section")
    spec = synth.SynthSpec.from_dict({**config.synth, "seed": config.seed})
    out_dir = Path(config.output_dir) / "synth"
    manifest = synth.generate(spec, out_dir)
    logger.info("synthetic city written to %s", out_dir)
    # Point the pipeline inputs at the generated files when not set explicitly.
    if config.gtfs_dir is None:
        config.gtfs_dir = Path(manifest["gtfs_dir"])
    if config.smartcard_csv is None:
        config.smartcard_csv = Path(manifest["smartcard_csv"])
    if config.poi_geojson is None:
        config.poi_geojson = Path(manifest["poi_geojson"])


def resolve_input_paths(config: PipelineConfig) -> PipelineConfig:
    """Default missing input paths to the synth outputs under output_dir."""
    if config.synth:
        base = Path(config.output_dir) / "synth"
        if config.gtfs_dir is None:
            config.gtfs_dir = base / "gtfs"
        if config.smartcard_csv is None:
            config.smartcard_csv = base / "smartcard.csv"
        if config.poi_geojson is None:
            config.poi_geojson = base / "pois.geojson"
    return config


def run_ingest(config: PipelineConfig) -> None:
    resolve_input_paths(config)
    for label, path in (
        ("gtfs_dir", config.gtfs_dir),
        ("smartcard_csv", config.smartcard_csv),
        ("poi_geojson", config.poi_geojson),
    ):
        if path is None or not Path(path).exists():
            raise FileNotFoundError(f"input {label} not found: {path}")

    ws = Workspace(config)
    bundle, gtfs_reports = ingest.parse_gtfs(config.gtfs_dir)
    records, sc_report = ingest.parse_smartcard(config.smartcard_csv)
    cleaned = ingest.clean_boardings(records)
    samples, join_report = ingest.join_lateness(cleaned, bundle)
    _, poi_report = ingest.parse_pois(config.poi_geojson)

    ws.dir.mkdir(parents=True, exist_ok=True)
    with open(ws.path("lateness_samples"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["line_id", "trip_id", "stop_id", "timestamp", "scheduled_s", "actual_s", "lateness_s"]
        )
        for s in samples:
            writer.writerow(
                [s.line_id, s.trip_id, s.stop_id, s.timestamp.isoformat(), s.scheduled_s, s.actual_s, s.lateness_s]
            )
    ws.mark("lateness_samples", {"samples": len(samples)})

    ws.write_json(
        "parse_report",
        {
            "files": [r.to_dict() for r in gtfs_reports + [sc_report, poi_report]],
            "usable_trips": bundle.usable_trip_count(),
            "clean": {
                "input_count": len(records),
                "kept": len(cleaned),
                "removed": len(records) - len(cleaned),
            },
            "join": join_report.to_dict(),
        },
    )
    logger.info("ingest: %d samples from %d boardings", len(samples), len(records))


def load_samples_csv(path: Path) -> list[ingest.LatenessSample]:
    samples = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            samples.append(
                ingest.LatenessSample(
                    line_id=row["line_id"],
                    trip_id=row["trip_id"],
                    stop_id=row["stop_id"],
                    timestamp=ingest.parse_timestamp(row["timestamp"]),
                    scheduled_s=int(row["scheduled_s"]),
                    actual_s=int(row["actual_s"]),
                    lateness_s=int(row["lateness_s"]),
                )
            )
    return samples


def run_build_graph(config: PipelineConfig) -> None:
    resolve_input_paths(config)
    ws = Workspace(config)
    ws.check("parse_report")  # ingest must have validated the inputs
    bundle, _ = ingest.parse_gtfs(config.gtfs_dir)
    pois, _ = ingest.parse_pois(config.poi_geojson)

    graph = network.build_graph(bundle, snap_grid_m=config.network["snap_grid_m"])
    graph = network.assign_attributes(graph, pois, buffer_m=config.network["poi_buffer_m"])
    projection = network.project_stops(
        graph, bundle, max_snap_m=config.network["stop_max_snap_m"]
    )
    graph.stop_index.update(projection.mapping)
    specs, excluded = network.derive_route_specs(graph, bundle, projection.mapping)

    ws.dir.mkdir(parents=True, exist_ok=True)
    graph.save_json(ws.path("graph"))
    ws.mark("graph", {"nodes": len(graph.nodes), "edges": len(graph.edges)})
    ws.write_json(
        "routes",
        {
            "specs": [
                {
                    "route_id": s.route_id,
                    "trip_id": s.trip_id,
                    "shape_id": s.shape_id,
                    "stop_ids": s.stop_ids,
                    "stop_nodes": s.stop_nodes,
                    "original_edges": s.original_edges,
                }
                for s in specs
            ],
            "excluded": excluded,
            "unmapped_stops": projection.unmapped,
        },
    )
    logger.info(
        "graph: %d nodes, %d edges, %d routes (%d excluded)",
        len(graph.nodes),
        len(graph.edges),
        len(specs),
        len(excluded),
    )


def load_graph(ws: Workspace) -> RoadNetwork:
    return RoadNetwork.load_json(ws.check("graph"))


def load_route_specs(ws: Workspace) -> list[RouteSpec]:
    doc = ws.read_json("routes")
    return [
        RouteSpec(
            route_id=d["route_id"],
            trip_id=d["trip_id"],
            shape_id=d["shape_id"],
            stop_ids=d["stop_ids"],
            stop_nodes=d["stop_nodes"],
            original_edges=d["original_edges"],
        )
        for d in doc["specs"]
    ]


def run_label(config: PipelineConfig) -> None:
    ws = Workspace(config)
    graph = load_graph(ws)
    samples = load_samples_csv(ws.check("lateness_samples"))
    bundle, _ = ingest.parse_gtfs(config.gtfs_dir) if config.gtfs_dir else (None, None)
    if bundle is None:
        raise FileNotFoundError("gtfs_dir is required for labeling")

    labels = labeling.segment_labels(graph, samples, bundle)
    if not labels:
        raise RuntimeError("no labels produced; check that samples match the graph")
    dataset = labeling.build_dataset(labels, graph, seed=config.seed)
    dataset.to_csv(ws.path("dataset"))
    ws.mark("dataset", {"rows": len(dataset.edge_ids)})
    ws.write_json(
        "dataset_meta",
        {
            "normalizer": dataset.normalizer_dict(),
            "rows": len(dataset.edge_ids),
            "split_counts": {
                "train": int(dataset.mask(0).sum()),
                "val": int(dataset.mask(1).sum()),
                "test": int(dataset.mask(2).sum()),
            },
        },
    )
    logger.info("dataset: %d rows", len(dataset.edge_ids))


def load_dataset(ws: Workspace) -> labeling.Dataset:
    meta = ws.read_json("dataset_meta")
    return labeling.load_dataset_csv(ws.check("dataset"), meta["normalizer"])


def run_train(config: PipelineConfig) -> None:
    ws = Workspace(config)
    dataset = load_dataset(ws)
    mcfg = model_mod.ModelConfig.from_dict(config.model.get("hyperparameters", config.model))
    pretrain = config.model.get("pretrain", True)
    if pretrain:
        encoder = model_mod.pretrain_autoencoder(dataset, config.seed, mcfg)
        trained, report = model_mod.train_regressor(
            dataset, mcfg, config.seed, encoder_init=encoder
        )
    else:
        trained, report = model_mod.train_regressor(dataset, mcfg, config.seed)
    trained.save_json(ws.path("model"))
    ws.mark("model")
    ws.write_json("train_report", report.to_json_dict())
    logger.info("model trained: test RMSE %s", report.final_test_rmse)


def load_model(ws: Workspace) -> model_mod.LatenessModel:
    return model_mod.LatenessModel.load_json(ws.check("model"))


def run_weigh(config: PipelineConfig) -> None:
    ws = Workspace(config)
    graph = load_graph(ws)
    trained = load_model(ws)
    for period in PERIOD_ORDER:
        wg = optimizer.weigh_graph(graph, trained, period)
        name = f"weights_{period.value}"
        ws.write_json(
            name,
            {
                "period": period.value,
                "weights": [wg.weights[eid] for eid in sorted(graph.edges)],
            },
        )
    logger.info("weights written for %d periods", len(PERIOD_ORDER))


def load_weighted_graph(ws: Workspace, graph: RoadNetwork, period: TimePeriod) -> optimizer.WeightedGraph:
    doc = ws.read_json(f"weights_{period.value}")
    weights = {eid: w for eid, w in zip(sorted(graph.edges), doc["weights"])}
    return optimizer.WeightedGraph(network=graph, period=period, weights=weights)


def run_suggest(config: PipelineConfig) -> None:
    ws = Workspace(config)
    graph = load_graph(ws)
    specs = load_route_specs(ws)
    wgraphs = {p: load_weighted_graph(ws, graph, p) for p in PERIOD_ORDER}
    suggestions, excluded = optimizer.suggest_all(wgraphs, specs)
    ws.write_json(
        "suggestions",
        {
            "suggestions": [s.to_json_dict(graph) for s in suggestions],
            "excluded": excluded,
        },
    )
    changed = sum(1 for s in suggestions if s.changed)
    logger.info("%d suggestions (%d changed)", len(suggestions), changed)


def run_rank(config: PipelineConfig) -> None:
    ws = Workspace(config)
    doc = ws.read_json("suggestions")
    suggestions = [optimizer.RouteSuggestion.from_json_dict(d) for d in doc["suggestions"]]
    distribution = optimizer.rank_routes(suggestions)
    ws.write_json("distribution", distribution.to_json_dict())


def rank_listing(config: PipelineConfig, period: str, cutoff: float) -> list[str]:
    """Human-readable ranked listing filtered by the improvement cutoff."""
    ws = Workspace(config)
    doc = ws.read_json("distribution")
    period_names = [p.value for p in PERIOD_ORDER] if period == "all" else [period]
    lines = []
    for name in period_names:
        entry = doc["periods"][name]
        lines.append(f"[{name}] changed fraction {entry['changed_fraction']:.2f}")
        for row in entry["routes"]:
            if row["improvement_pct"] >= cutoff:
                flag = "changed" if row["changed"] else "unchanged"
                lines.append(
                    f"  {row['route_id']}: {row['improvement_pct']:.2f}% ({flag})"
                )
    return lines
