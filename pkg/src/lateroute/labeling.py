"""Turn stop-level lateness samples into per-edge training labels.

Smart cards observe lateness only at stops, but the regressor predicts per
road segment. For each trip, the lateness increment between consecutive
observed stops is clamped to zero and spread over the edges of the trip's
path between them, proportionally to edge length. The attribution rule is a
declared gap-fill isolated in this module so alternatives can be swapped.
"""
from __future__ import annotations

import csv
import hashlib
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geo
from .ingest import GtfsBundle, LatenessSample, Timestamp
from .network import ATTRIBUTE_NAMES, PERIOD_ORDER, RoadNetwork, TimePeriod, period_of

# Feature columns whose relative spread is below this are treated as
# constant: z-scoring them would only amplify numerical noise.
_CONSTANT_REL_STD = 1e-6


@dataclass(frozen=True)
class EdgeLabel:
    edge_id: int
    period: TimePeriod
    label_s: float
    timestamp: Timestamp


@dataclass
class PairAttribution:
    """One consecutive observed stop pair and the labels distributed over it."""

    trip_id: str
    service_date: str
    from_stop: str
    to_stop: str
    increment_s: float
    labels: list[EdgeLabel]


@dataclass
class AttributionReport:
    pairs: int = 0
    skipped_pairs: int = 0
    skipped_samples: int = 0
    single_stop_trips: int = 0


def _edge_length(graph: RoadNetwork, edge_id: int) -> float:
    attrs = graph.attrs.get(edge_id)
    if attrs is not None:
        return attrs.length_m
    return geo.polyline_length_m(list(graph.edges[edge_id].polyline))


def segment_labels_detailed(
    graph: RoadNetwork, samples: list[LatenessSample], gtfs: GtfsBundle
) -> tuple[list[PairAttribution], AttributionReport]:
    """Attribute lateness increments to edges, keeping per-pair detail.

    Multiple samples at the same (trip, date, stop) are averaged before
    differencing. Trips with a single observed stop contribute nothing.
    """
    report = AttributionReport()
    sts_by_trip = gtfs.stop_times_by_trip()
    seq_of: dict[tuple[str, str], int] = {}
    for trip_id, sts in sts_by_trip.items():
        for st in sts:
            seq_of[(trip_id, st.stop_id)] = st.stop_sequence

    groups: dict[tuple[str, str], list[LatenessSample]] = defaultdict(list)
    for s in samples:
        groups[(s.trip_id, s.timestamp.service_date.isoformat())].append(s)

    pairs: list[PairAttribution] = []
    for (trip_id, date_iso) in sorted(groups):
        group = groups[(trip_id, date_iso)]
        trip = gtfs.trips.get(trip_id)
        if trip is None or trip.shape_id not in graph.shape_paths:
            report.skipped_samples += len(group)
            continue

        # One (lateness, actual-time) point per observed stop, ordered by the
        # trip's stop_sequence.
        per_stop: dict[str, list[LatenessSample]] = defaultdict(list)
        for s in group:
            per_stop[s.stop_id].append(s)
        observed = []
        skipped_here = 0
        for stop_id, ss in per_stop.items():
            seq = seq_of.get((trip_id, stop_id))
            if seq is None:
                skipped_here += len(ss)
                continue
            lateness = float(np.mean([x.lateness_s for x in ss]))
            actual = int(round(float(np.mean([x.actual_s for x in ss]))))
            observed.append((seq, stop_id, lateness, actual, len(ss)))
        report.skipped_samples += skipped_here
        observed.sort(key=lambda o: o[0])
        if len(observed) < 2:
            report.single_stop_trips += 1
            continue

        chain = graph.shape_paths[trip.shape_id]
        chain_nodes = [graph.edges[chain[0]].from_node] + [
            graph.edges[eid].to_node for eid in chain
        ]
        date = group[0].timestamp.service_date

        prev = observed[0]
        prev_pos = _chain_position(chain_nodes, graph.stop_index.get(prev[1]), 0)
        for cur in observed[1:]:
            node = graph.stop_index.get(cur[1])
            pos = _chain_position(chain_nodes, node, prev_pos if prev_pos is not None else 0)
            if prev_pos is None or pos is None:
                report.skipped_pairs += 1
                report.skipped_samples += cur[4]
                prev, prev_pos = cur, pos
                continue
            edge_ids = chain[prev_pos:pos]
            increment = max(0.0, cur[2] - prev[2])
            ts = Timestamp(date, cur[3])
            period = period_of(ts)
            labels = _distribute(graph, edge_ids, increment, period, ts)
            pairs.append(
                PairAttribution(
                    trip_id=trip_id,
                    service_date=date_iso,
                    from_stop=prev[1],
                    to_stop=cur[1],
                    increment_s=increment,
                    labels=labels,
                )
            )
            report.pairs += 1
            prev, prev_pos = cur, pos
    return pairs, report


def _chain_position(chain_nodes: list[int], node: int | None, start: int) -> int | None:
    if node is None:
        return None
    for i in range(start, len(chain_nodes)):
        if chain_nodes[i] == node:
            return i
    return None


def _distribute(
    graph: RoadNetwork,
    edge_ids: list[int],
    increment_s: float,
    period: TimePeriod,
    ts: Timestamp,
) -> list[EdgeLabel]:
    if not edge_ids:
        return []
    lengths = [_edge_length(graph, eid) for eid in edge_ids]
    total = sum(lengths)
    labels = []
    for eid, ln in zip(edge_ids, lengths):
        share = ln / total if total > 0 else 1.0 / len(edge_ids)
        labels.append(EdgeLabel(edge_id=eid, period=period, label_s=increment_s * share, timestamp=ts))
    return labels


def segment_labels(
    graph: RoadNetwork, samples: list[LatenessSample], gtfs: GtfsBundle
) -> list[EdgeLabel]:
    """Flat list of edge labels, canonically ordered by (edge, period, time)."""
    pairs, _ = segment_labels_detailed(graph, samples, gtfs)
    labels = [lbl for pair in pairs for lbl in pair.labels]
    labels.sort(key=lambda l: (l.edge_id, l.period.value, l.timestamp, l.label_s))
    return labels


def split_of(edge_id: int, period: TimePeriod, seed: int) -> int:
    """Deterministic 80/10/10 split bucket (0 train, 1 val, 2 test) keyed on
    (edge, period) so all labels of one key share a split."""
    digest = hashlib.sha256(f"{seed}|{edge_id}|{period.value}".encode()).hexdigest()
    u = int(digest[:16], 16) / 2**64
    if u < 0.8:
        return 0
    if u < 0.9:
        return 1
    return 2


@dataclass
class Dataset:
    """Model-ready rows: normalized numeric features, period index, target."""

    edge_ids: list[int]
    period_idx: np.ndarray  # (n,) int, index into PERIOD_ORDER
    features: np.ndarray  # (n, 6) z-scored with train-split statistics
    raw_features: np.ndarray  # (n, 6)
    targets: np.ndarray  # (n,) seconds
    split: np.ndarray  # (n,) 0/1/2
    feature_mean: np.ndarray
    feature_std: np.ndarray
    constant_features: list[str] = field(default_factory=list)
    seed: int = 0

    def mask(self, which: int) -> np.ndarray:
        return self.split == which

    def periods(self) -> list[TimePeriod]:
        return [PERIOD_ORDER[i] for i in self.period_idx]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["edge_id", "period", *ATTRIBUTE_NAMES, "label_s"])
            for i, eid in enumerate(self.edge_ids):
                writer.writerow(
                    [
                        eid,
                        PERIOD_ORDER[self.period_idx[i]].value,
                        *(repr(float(v)) for v in self.features[i]),
                        repr(float(self.targets[i])),
                    ]
                )

    def normalizer_dict(self) -> dict:
        return {
            "feature_mean": [float(v) for v in self.feature_mean],
            "feature_std": [float(v) for v in self.feature_std],
            "constant_features": list(self.constant_features),
            "seed": self.seed,
        }


def build_dataset(labels: list[EdgeLabel], graph: RoadNetwork, seed: int) -> Dataset:
    """One row per edge label; z-score features on train-split statistics.

    Columns whose spread is zero (or negligible relative to their mean) are
    normalized by 1 instead and flagged.
    """
    if not labels:
        raise ValueError("cannot build a dataset from zero labels")
    edge_ids = []
    period_idx = []
    raw = np.zeros((len(labels), len(ATTRIBUTE_NAMES)), dtype=np.float64)
    targets = np.zeros(len(labels), dtype=np.float64)
    split = np.zeros(len(labels), dtype=np.int64)
    period_pos = {p: i for i, p in enumerate(PERIOD_ORDER)}
    for i, lbl in enumerate(labels):
        attrs = graph.attrs.get(lbl.edge_id)
        if attrs is None:
            raise ValueError(f"edge {lbl.edge_id} has no attributes; run attribute assignment first")
        edge_ids.append(lbl.edge_id)
        period_idx.append(period_pos[lbl.period])
        raw[i] = attrs.as_vector()
        targets[i] = lbl.label_s
        split[i] = split_of(lbl.edge_id, lbl.period, seed)

    train = raw[split == 0]
    if train.shape[0] == 0:
        train = raw
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    constant = []
    for j, name in enumerate(ATTRIBUTE_NAMES):
        if std[j] <= _CONSTANT_REL_STD * max(1.0, abs(mean[j])):
            std[j] = 1.0
            constant.append(name)
    features = (raw - mean) / std
    return Dataset(
        edge_ids=edge_ids,
        period_idx=np.array(period_idx, dtype=np.int64),
        features=features,
        raw_features=raw,
        targets=targets,
        split=split,
        feature_mean=mean,
        feature_std=std,
        constant_features=constant,
        seed=seed,
    )


def load_dataset_csv(path: str | Path, normalizer: dict) -> Dataset:
    """Rebuild a Dataset from the exported CSV plus its normalizer metadata."""
    mean = np.array(normalizer["feature_mean"], dtype=np.float64)
    std = np.array(normalizer["feature_std"], dtype=np.float64)
    seed = int(normalizer["seed"])
    period_pos = {p.value: i for i, p in enumerate(PERIOD_ORDER)}
    edge_ids: list[int] = []
    period_idx: list[int] = []
    feats: list[list[float]] = []
    targets: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            edge_ids.append(int(row["edge_id"]))
            period_idx.append(period_pos[row["period"]])
            feats.append([float(row[name]) for name in ATTRIBUTE_NAMES])
            targets.append(float(row["label_s"]))
    features = np.array(feats, dtype=np.float64) if feats else np.zeros((0, 6))
    split = np.array(
        [split_of(e, PERIOD_ORDER[p], seed) for e, p in zip(edge_ids, period_idx)],
        dtype=np.int64,
    )
    return Dataset(
        edge_ids=edge_ids,
        period_idx=np.array(period_idx, dtype=np.int64),
        features=features,
        raw_features=features * std + mean,
        targets=np.array(targets, dtype=np.float64),
        split=split,
        feature_mean=mean,
        feature_std=std,
        constant_features=list(normalizer.get("constant_features", [])),
        seed=seed,
    )
