"""Acceptance suite: one test per release criterion, each printing a PASS
line with the measured figure. Quantitative checks run on synthetic cities
with planted congestion; routing checks run against exhaustive oracles."""
import json
import math
import subprocess
import sys
import time
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

from lateroute import ingest, labeling, network
from lateroute.model import (
    ModelConfig,
    _init_model,
    embedding_coords,
    gradient_check,
    pretrain_autoencoder,
    train_comparison,
    train_regressor,
)
from lateroute.network import PERIOD_ORDER, RouteSpec, TimePeriod
from lateroute.optimizer import WeightedGraph, shortest_path, suggest_route
from lateroute.pipeline import load_dataset
from lateroute.synth import brute_force_route
from lateroute.workspace import Workspace, load_config

from test_optimizer import enumerate_best_path, random_wgraph
from conftest import write_gtfs


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "lateroute", *args], capture_output=True, text=True, cwd=cwd
    )


CITY_CONFIG = {
    "seed": 42,
    "output_dir": "ws",
    "synth": {
        "rows": 10,
        "cols": 10,
        "n_routes": 20,
        "boardings_per_stop_per_day": 40,
        "n_days": 2,
        "headway_min": 30,
        "corridors": [
            {
                "axis": "row",
                "index": 4,
                "start": 3,
                "end": 7,
                "delay_s": 120.0,
                "periods": ["morning"],
            }
        ],
    },
    "model": {
        "pretrain": True,
        "hyperparameters": {"max_epochs": 120, "patience": 12, "pretrain_epochs": 40},
    },
}


@pytest.fixture(scope="module")
def city_workspace(tmp_path_factory):
    """The planted-congestion city, built end to end through the CLI."""
    root = tmp_path_factory.mktemp("acceptance_city")
    config_path = root / "config.json"
    config_path.write_text(json.dumps(CITY_CONFIG))
    started = time.monotonic()
    result = run_cli("all", "--config", str(config_path))
    elapsed = time.monotonic() - started
    assert result.returncode == 0, result.stderr
    return {"config_path": config_path, "root": root, "elapsed_s": elapsed}


class TestDijkstraOracle:
    def test_exact_match_on_100_random_graphs(self):
        started = time.monotonic()
        checked = 0
        for seed in range(100):
            wg, rng = random_wgraph(seed, integer_weights=True)
            nodes = sorted(wg.network.nodes)
            u, v = (int(x) for x in rng.choice(nodes, size=2, replace=False))
            got = shortest_path(wg, u, v)
            expected = enumerate_best_path(wg, u, v)
            if expected is None:
                assert got is None, f"seed {seed}: engine found a path the oracle did not"
            else:
                assert got is not None, f"seed {seed}: unreachable but oracle found a path"
                assert got.cost == expected[0], f"seed {seed}: cost mismatch"
                assert got.edges == expected[1], f"seed {seed}: tie-break mismatch"
            checked += 1
        elapsed = time.monotonic() - started
        assert checked == 100
        assert elapsed < 10.0
        print(
            f"\nACCEPTANCE PASS: Dijkstra oracle — 100/100 graphs exact "
            f"(cost and tie-break) in {elapsed:.2f}s"
        )


class TestDegenerateWeights:
    def test_min_hop_and_min_distance_on_20_fixtures(self):
        hop_checked = dist_checked = 0
        for seed in range(20):
            wg, rng = random_wgraph(seed + 500, n_nodes=8)
            nodes = sorted(wg.network.nodes)
            stops = [int(x) for x in rng.choice(nodes, size=3, replace=False)]

            uniform = WeightedGraph(
                network=wg.network, period=wg.period, weights={e: 1.0 for e in wg.weights}
            )
            oracle = brute_force_route(uniform, stops, node_limit=10)
            spec = RouteSpec("R", "T", "S", ["a", "b", "c"], stops, [])
            if oracle is not None:
                suggestion = suggest_route(uniform, spec)
                assert suggestion.proposed_cost == oracle.cost  # cost == hop count
                assert len(suggestion.proposed_edges) == int(oracle.cost)
                hop_checked += 1

            lengths = {e: wg.network.attrs[e].length_m for e in wg.weights}
            by_len = WeightedGraph(network=wg.network, period=wg.period, weights=lengths)
            oracle_len = brute_force_route(by_len, stops, node_limit=10)
            if oracle_len is not None:
                suggestion = suggest_route(by_len, spec)
                assert suggestion.proposed_cost == oracle_len.cost
                assert tuple(suggestion.proposed_edges) == oracle_len.edges
                dist_checked += 1
        assert hop_checked >= 10 and dist_checked >= 10
        print(
            f"\nACCEPTANCE PASS: degenerate weights — min-hop on {hop_checked} and "
            f"shortest-distance on {dist_checked} fixtures match the brute-force oracle exactly"
        )


class TestGradientCorrectness:
    def test_20_random_model_sample_pairs(self):
        from test_model import dataset_from_attrs, random_attrs

        rng = np.random.default_rng(2024)
        dataset, _ = dataset_from_attrs(
            random_attrs(rng, 40), lambda a, p: rng.uniform(0, 200), seed=77
        )
        worst = 0.0
        for trial in range(20):
            model = _init_model(dataset, ModelConfig(), seed=500 + trial)
            model.target_mean = float(rng.uniform(0, 100))
            model.target_std = float(rng.uniform(0.5, 30))
            z = rng.normal(size=6)
            period = int(rng.integers(5))
            out = float(model.raw_output_s(z[None, :], np.array([period]))[0])
            target = out + float(rng.uniform(1.0, 5.0)) * (1 if rng.normal() > 0 else -1)
            worst = max(worst, gradient_check(model, z, period, target))
        assert worst < 1e-4
        print(
            f"\nACCEPTANCE PASS: gradient correctness — max relative error "
            f"{worst:.2e} < 1e-4 over 20 (model, sample) pairs"
        )


class TestPretrainingBenefit:
    def test_median_val_rmse_across_5_seeds(self, city_workspace):
        # Fig.-5-style protocol: a fixed early-training budget, where faster
        # convergence shows up as lower validation RMSE at the budget's end.
        config = load_config(city_workspace["config_path"])
        dataset = load_dataset(Workspace(config))
        mcfg = ModelConfig(max_epochs=12, patience=12, pretrain_epochs=80)
        started = time.monotonic()
        pretrained, scratch = [], []
        for seed in range(5):
            _, report = train_comparison(dataset, mcfg, seed)
            pretrained.append(report.runs["pretrained"]["final_val_rmse"])
            scratch.append(report.runs["scratch"]["final_val_rmse"])
        elapsed = time.monotonic() - started
        med_pre, med_scr = float(np.median(pretrained)), float(np.median(scratch))
        assert med_pre <= med_scr
        assert elapsed < 300.0
        print(
            f"\nACCEPTANCE PASS: AE pretraining benefit — median val RMSE "
            f"{med_pre:.3f}s (pretrained) <= {med_scr:.3f}s (scratch) over 5 seeds "
            f"in {elapsed:.0f}s"
        )


class TestPlantedCongestion:
    def test_end_to_end_suggestions(self, city_workspace):
        assert city_workspace["elapsed_s"] < 600.0
        ws_dir = city_workspace["root"] / "ws"
        ground_truth = json.loads((ws_dir / "synth" / "ground_truth.json").read_text())
        suggestions = json.loads((ws_dir / "suggestions.json").read_text())["suggestions"]
        by_route_period = {(s["route_id"], s["period"]): s for s in suggestions}

        crossing_with_detour = [
            rid
            for rid in ground_truth["corridor_routes"]
            if ground_truth["routes"][rid]["periods"]["morning"]["detour_available"]
        ]
        assert crossing_with_detour, "fixture must plant at least one improvable route"
        improved = [
            rid
            for rid in crossing_with_detour
            if by_route_period[(rid, "morning")]["changed"]
            and by_route_period[(rid, "morning")]["improvement_pct"] > 0
        ]
        crossing_rate = len(improved) / len(crossing_with_detour)

        non_crossing = ground_truth["non_corridor_routes"]
        unchanged = [
            rid
            for rid in non_crossing
            if all(not by_route_period[(rid, p.value)]["changed"] for p in PERIOD_ORDER)
        ]
        unchanged_rate = len(unchanged) / len(non_crossing)

        assert crossing_rate >= 0.8
        assert unchanged_rate >= 0.95
        print(
            f"\nACCEPTANCE PASS: planted congestion end-to-end — "
            f"{len(improved)}/{len(crossing_with_detour)} corridor routes improved in the morning, "
            f"{len(unchanged)}/{len(non_crossing)} clean routes unchanged in all periods, "
            f"pipeline took {city_workspace['elapsed_s']:.0f}s"
        )


class TestEmbeddingSimilarity:
    def test_morning_noon_closer_than_night_evening(self, tmp_path):
        from lateroute.synth import Corridor, SynthSpec, generate

        spec = SynthSpec(
            rows=8,
            cols=8,
            n_routes=16,
            boardings_per_stop_per_day=60,
            n_days=2,
            headway_min=30,
            seed=99,
            corridors=[
                Corridor("row", 3, 1, 6, 120.0, (TimePeriod.MORNING, TimePeriod.NOON)),
                Corridor("col", 5, 1, 6, 150.0, (TimePeriod.EVENING,)),
            ],
        )
        manifest = generate(spec, tmp_path)
        bundle, _ = ingest.parse_gtfs(manifest["gtfs_dir"])
        records, _ = ingest.parse_smartcard(manifest["smartcard_csv"])
        samples, _ = ingest.join_lateness(ingest.clean_boardings(records), bundle)
        pois, _ = ingest.parse_pois(manifest["poi_geojson"])
        graph = network.assign_attributes(network.build_graph(bundle), pois)
        projection = network.project_stops(graph, bundle)
        graph.stop_index.update(projection.mapping)
        dataset = labeling.build_dataset(
            labeling.segment_labels(graph, samples, bundle), graph, seed=0
        )

        mcfg = ModelConfig(max_epochs=200, patience=20, pretrain_epochs=40)
        wins = 0
        details = []
        for seed in range(5):
            encoder = pretrain_autoencoder(dataset, seed, mcfg)
            model, _ = train_regressor(dataset, mcfg, seed, encoder_init=encoder)
            coords = embedding_coords(model)
            dist_mn = math.dist(coords[TimePeriod.MORNING], coords[TimePeriod.NOON])
            dist_ne = math.dist(coords[TimePeriod.NIGHT], coords[TimePeriod.EVENING])
            wins += dist_mn < dist_ne
            details.append(f"{dist_mn:.2f}<{dist_ne:.2f}")
        assert wins >= 4
        print(
            f"\nACCEPTANCE PASS: embedding similarity — morning/noon closer than "
            f"night/evening in {wins}/5 seeds ({', '.join(details)})"
        )


class TestLatenessJoinFixture:
    def test_hand_computed_table(self, tmp_path):
        directory = write_gtfs(
            tmp_path / "gtfs",
            stops=[(f"X{i}", 32.0 + i * 0.002, 34.0) for i in range(1, 6)],
            routes=["R9"],
            trips=[("T1", "R9", "SH9"), ("T2", "R9", "SH9")],
            stop_times=[
                ("T1", "X1", 1, "08:00:00"),
                ("T1", "X2", 2, "08:04:00"),
                ("T1", "X3", 3, "08:09:00"),
                ("T1", "X4", 4, "08:15:00"),
                ("T1", "X5", 5, "08:22:00"),
                ("T2", "X1", 1, "24:30:00"),  # after-midnight service
            ],
            shapes={"SH9": [(32.0, 34.0), (32.01, 34.0)]},
        )
        bundle, _ = ingest.parse_gtfs(directory)

        rows = [
            # 17 joinable records with hand-computed lateness.
            ("C01", "T1", "X1", "2024-03-05 08:00:30", 30),
            ("C02", "T1", "X1", "2024-03-05 08:01:00", 60),
            ("C03", "T1", "X1", "2024-03-05 08:00:00", 0),
            ("C04", "T1", "X2", "2024-03-05 08:05:10", 70),
            ("C05", "T1", "X2", "2024-03-05 08:04:45", 45),
            ("C06", "T1", "X3", "2024-03-05 08:09:00", 0),
            ("C07", "T1", "X3", "2024-03-05 08:10:30", 90),
            ("C08", "T1", "X3", "2024-03-05 08:09:59", 59),
            ("C09", "T1", "X4", "2024-03-05 08:16:40", 100),
            ("C10", "T1", "X4", "2024-03-05 08:15:02", 2),
            ("C11", "T1", "X4", "2024-03-05 08:17:00", 120),
            ("C12", "T1", "X5", "2024-03-05 08:24:00", 120),
            ("C13", "T1", "X5", "2024-03-05 08:22:05", 5),
            ("C14", "T1", "X5", "2024-03-05 08:25:21", 201),
            ("C15", "T1", "X5", "2024-03-05 08:22:30", 30),
            ("C16", "T2", "X1", "2024-03-05 24:35:00", 300),
            ("C17", "T2", "X1", "2024-03-05 24:30:10", 10),
        ]
        early = [("C18", "T1", "X2", "2024-03-05 08:03:00", None)]  # footnote case
        missing = [
            ("C19", "", "X1", "2024-03-05 08:00:00", None),
            ("C20", "T1", "", "2024-03-05 08:00:00", None),
        ]
        csv_path = tmp_path / "smartcard.csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("card_id,trip_id,boarding_stop_id,boarding_time\n")
            for card, trip, stop, when, _ in rows + early + missing:
                fh.write(f"{card},{trip},{stop},{when}\n")

        records, report = ingest.parse_smartcard(csv_path)
        assert len(records) == 20
        cleaned = ingest.clean_boardings(records)
        assert len(cleaned) == 18  # two dropped for missing fields
        samples, join_report = ingest.join_lateness(cleaned, bundle)
        assert join_report.discarded_early == 1
        assert join_report.dropped_unmatched == 0

        got = {(s.trip_id, s.stop_id, s.actual_s): s.lateness_s for s in samples}
        assert len(samples) == 17
        for card, trip, stop, when, expected in rows:
            ts = ingest.parse_timestamp(when)
            assert got[(trip, stop, ts.seconds)] == expected, card
            sample = next(
                s for s in samples if (s.trip_id, s.stop_id, s.actual_s) == (trip, stop, ts.seconds)
            )
            assert sample.lateness_s == sample.actual_s - sample.scheduled_s
            assert sample.lateness_s >= 0
        print(
            "\nACCEPTANCE PASS: lateness join — 20-record fixture reproduced the "
            "hand table exactly (17 samples, 1 early discarded, 2 dropped for missing fields)"
        )


class TestLabelConservation:
    def test_every_pair_sums_to_clamped_increment(self, city_workspace):
        from lateroute.pipeline import load_graph, load_samples_csv, resolve_input_paths

        config = resolve_input_paths(load_config(city_workspace["config_path"]))
        ws = Workspace(config)
        graph = load_graph(ws)
        samples = load_samples_csv(ws.check("lateness_samples"))
        bundle, _ = ingest.parse_gtfs(config.gtfs_dir)
        pairs, _ = labeling.segment_labels_detailed(graph, samples, bundle)
        assert pairs

        # Independent recomputation of each pair's clamped increment from the
        # raw samples.
        sts_by_trip = bundle.stop_times_by_trip()
        seq_of = {
            (tid, st.stop_id): st.stop_sequence
            for tid, sts in sts_by_trip.items()
            for st in sts
        }
        grouped = defaultdict(lambda: defaultdict(list))
        for s in samples:
            grouped[(s.trip_id, s.timestamp.service_date.isoformat())][s.stop_id].append(
                s.lateness_s
            )

        worst = 0.0
        for pair in pairs:
            per_stop = grouped[(pair.trip_id, pair.service_date)]
            mean_from = float(np.mean(per_stop[pair.from_stop]))
            mean_to = float(np.mean(per_stop[pair.to_stop]))
            assert seq_of[(pair.trip_id, pair.from_stop)] < seq_of[(pair.trip_id, pair.to_stop)]
            expected = max(0.0, mean_to - mean_from)
            total = math.fsum(l.label_s for l in pair.labels)
            worst = max(worst, abs(total - expected))
            assert abs(total - expected) <= 1e-9
            assert all(l.label_s >= 0 for l in pair.labels)
        print(
            f"\nACCEPTANCE PASS: label conservation — {len(pairs)} stop pairs, "
            f"worst |sum - increment| = {worst:.2e}s <= 1e-9s"
        )


class TestDeterminism:
    def test_deterministic_all_is_byte_identical(self, tmp_path):
        config_doc = {
            "seed": 31,
            "output_dir": "ws",
            "synth": {
                "rows": 5,
                "cols": 5,
                "n_routes": 10,
                "boardings_per_stop_per_day": 25,
                "n_days": 1,
                "headway_min": 60,
                "corridors": [
                    {
                        "axis": "row",
                        "index": 2,
                        "start": 1,
                        "end": 3,
                        "delay_s": 120.0,
                        "periods": ["morning"],
                    }
                ],
            },
            "model": {
                "pretrain": True,
                "hyperparameters": {"max_epochs": 40, "patience": 8, "pretrain_epochs": 20},
            },
        }
        outputs = []
        for run in ("a", "b"):
            root = tmp_path / run
            root.mkdir()
            config_path = root / "config.json"
            config_path.write_text(json.dumps(config_doc))
            result = run_cli("all", "--deterministic", "--config", str(config_path))
            assert result.returncode == 0, result.stderr
            outputs.append((root / "ws" / "suggestions.json").read_bytes())
        assert outputs[0] == outputs[1]
        print(
            f"\nACCEPTANCE PASS: determinism — two deterministic runs produced "
            f"byte-identical suggestions JSON ({len(outputs[0])} bytes)"
        )
