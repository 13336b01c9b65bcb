"""Parse GTFS, smart-card and POI inputs; clean records; join boardings to
schedules to produce non-negative lateness samples.

All functions are pure: they read files or lists and return new objects plus
per-file reports, so the pipeline can emit a single parse report JSON.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

POI_KINDS = ("traffic_light", "pt_stop", "petrol_station", "public_parking", "private_parking")

# GTFS clock times may run past 24:00 for after-midnight service; anything at
# or beyond 48:00:00 is treated as malformed.
MAX_CLOCK_S = 48 * 3600


class IngestError(Exception):
    """Fatal input problem (missing file, unreadable feed)."""


@dataclass(frozen=True, order=True)
class Timestamp:
    """A service date plus seconds since that date's midnight (may exceed 86400)."""

    service_date: dt.date
    seconds: int

    def clock_seconds(self) -> int:
        return self.seconds % 86400

    def isoformat(self) -> str:
        h, rem = divmod(self.seconds, 3600)
        m, s = divmod(rem, 60)
        return f"{self.service_date.isoformat()} {h:02d}:{m:02d}:{s:02d}"


def parse_clock_s(text: str) -> int:
    """Parse an HH:MM:SS clock string into seconds, allowing GTFS overflow
    hours up to 47:59:59."""
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise ValueError(f"bad clock time {text!r}")
    h, m, s = (int(p) for p in parts)
    if not (0 <= m < 60 and 0 <= s < 60 and 0 <= h):
        raise ValueError(f"bad clock time {text!r}")
    total = h * 3600 + m * 60 + s
    if total >= MAX_CLOCK_S:
        raise ValueError(f"clock time {text!r} beyond GTFS overflow convention")
    return total


def parse_timestamp(text: str) -> Timestamp:
    """Parse 'YYYY-MM-DD HH:MM:SS' where HH may exceed 23 per GTFS convention."""
    date_part, _, time_part = text.strip().partition(" ")
    if not time_part:
        raise ValueError(f"bad timestamp {text!r}")
    service_date = dt.date.fromisoformat(date_part)
    return Timestamp(service_date, parse_clock_s(time_part))


@dataclass
class FileReport:
    """Row accounting for one parsed input file."""

    file: str
    rows_read: int = 0
    rows_dropped: int = 0
    reasons: dict[str, int] = field(default_factory=dict)

    def drop(self, reason: str, n: int = 1) -> None:
        self.rows_dropped += n
        self.reasons[reason] = self.reasons.get(reason, 0) + n

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "rows_read": self.rows_read,
            "rows_dropped": self.rows_dropped,
            "reasons": dict(sorted(self.reasons.items())),
        }


@dataclass(frozen=True)
class GtfsStop:
    stop_id: str
    name: str
    lat: float
    lon: float


@dataclass(frozen=True)
class GtfsTrip:
    trip_id: str
    route_id: str
    shape_id: str
    service_period: tuple[dt.date, dt.date] | None = None


@dataclass(frozen=True)
class GtfsStopTime:
    trip_id: str
    stop_id: str
    stop_sequence: int
    scheduled_arrival_s: int


@dataclass
class GtfsBundle:
    """In-memory GTFS subset: stops, routes, trips, stop_times, shapes."""

    stops: dict[str, GtfsStop]
    route_ids: list[str]
    trips: dict[str, GtfsTrip]
    stop_times: list[GtfsStopTime]
    shapes: dict[str, list[tuple[float, float]]]

    def stop_times_by_trip(self) -> dict[str, list[GtfsStopTime]]:
        by_trip: dict[str, list[GtfsStopTime]] = defaultdict(list)
        for st in self.stop_times:
            by_trip[st.trip_id].append(st)
        for rows in by_trip.values():
            rows.sort(key=lambda r: r.stop_sequence)
        return dict(by_trip)

    def usable_trip_count(self) -> int:
        """Trips that have at least one stop_time."""
        return len({st.trip_id for st in self.stop_times})


@dataclass(frozen=True)
class BoardingRecord:
    card_id: str
    trip_id: str | None
    boarding_stop_id: str | None
    boarding_time: Timestamp


@dataclass(frozen=True)
class LatenessSample:
    """One boarding joined to its schedule; lateness is always >= 0."""

    line_id: str
    trip_id: str
    stop_id: str
    timestamp: Timestamp
    scheduled_s: int
    actual_s: int
    lateness_s: int


@dataclass
class PoiSet:
    traffic_lights: list[tuple[float, float]] = field(default_factory=list)
    pt_stops: list[tuple[float, float]] = field(default_factory=list)
    petrol_stations: list[tuple[float, float]] = field(default_factory=list)
    public_parking: list[tuple[float, float]] = field(default_factory=list)
    private_parking: list[tuple[float, float]] = field(default_factory=list)

    def bucket(self, kind: str) -> list[tuple[float, float]]:
        return getattr(self, _POI_ATTR[kind])


_POI_ATTR = {
    "traffic_light": "traffic_lights",
    "pt_stop": "pt_stops",
    "petrol_station": "petrol_stations",
    "public_parking": "public_parking",
    "private_parking": "private_parking",
}


def _read_csv(path: Path) -> tuple[list[dict], FileReport]:
    report = FileReport(file=path.name)
    rows = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        for row in csv.DictReader(fh):
            report.rows_read += 1
            rows.append(row)
    return rows, report


def parse_gtfs(directory: str | Path) -> tuple[GtfsBundle, list[FileReport]]:
    """Parse the five required GTFS text files from a directory.

    Rows violating referential integrity are dropped and counted; a missing
    file is fatal.
    """
    directory = Path(directory)
    paths = {}
    for name in ("stops", "routes", "trips", "stop_times", "shapes"):
        path = directory / f"{name}.txt"
        if not path.exists():
            raise IngestError(f"missing required GTFS file: {path}")
        paths[name] = path

    reports: list[FileReport] = []

    rows, rep = _read_csv(paths["stops"])
    stops: dict[str, GtfsStop] = {}
    for row in rows:
        try:
            stop = GtfsStop(
                stop_id=row["stop_id"].strip(),
                name=(row.get("stop_name") or "").strip(),
                lat=float(row["stop_lat"]),
                lon=float(row["stop_lon"]),
            )
        except (KeyError, ValueError, TypeError):
            rep.drop("malformed row")
            continue
        if not stop.stop_id or not (-90.0 <= stop.lat <= 90.0 and -180.0 <= stop.lon <= 180.0):
            rep.drop("malformed row")
            continue
        stops[stop.stop_id] = stop
    reports.append(rep)

    rows, rep = _read_csv(paths["routes"])
    route_ids: list[str] = []
    for row in rows:
        rid = (row.get("route_id") or "").strip()
        if not rid:
            rep.drop("malformed row")
            continue
        route_ids.append(rid)
    reports.append(rep)
    route_set = set(route_ids)

    rows, rep = _read_csv(paths["shapes"])
    shape_pts: dict[str, list[tuple[int, float, float]]] = defaultdict(list)
    for row in rows:
        try:
            sid = row["shape_id"].strip()
            seq = int(row["shape_pt_sequence"])
            lat = float(row["shape_pt_lat"])
            lon = float(row["shape_pt_lon"])
        except (KeyError, ValueError, TypeError):
            rep.drop("malformed row")
            continue
        shape_pts[sid].append((seq, lat, lon))
    shapes: dict[str, list[tuple[float, float]]] = {}
    for sid, pts in shape_pts.items():
        pts.sort(key=lambda p: p[0])
        cleaned: list[tuple[int, float, float]] = []
        for p in pts:
            if cleaned and p[0] <= cleaned[-1][0]:
                rep.drop("non-increasing shape sequence")
                continue
            cleaned.append(p)
        if len(cleaned) < 2:
            rep.drop("shape with fewer than 2 points", n=len(cleaned))
            continue
        shapes[sid] = [(lat, lon) for _, lat, lon in cleaned]
    reports.append(rep)

    rows, rep = _read_csv(paths["trips"])
    trips: dict[str, GtfsTrip] = {}
    for row in rows:
        tid = (row.get("trip_id") or "").strip()
        rid = (row.get("route_id") or "").strip()
        sid = (row.get("shape_id") or "").strip()
        if not tid:
            rep.drop("malformed row")
            continue
        if rid not in route_set:
            rep.drop("unknown route_id")
            continue
        if sid not in shapes:
            rep.drop("unknown shape_id")
            continue
        trips[tid] = GtfsTrip(trip_id=tid, route_id=rid, shape_id=sid)
    reports.append(rep)

    rows, rep = _read_csv(paths["stop_times"])
    raw_sts: list[GtfsStopTime] = []
    for row in rows:
        try:
            st = GtfsStopTime(
                trip_id=row["trip_id"].strip(),
                stop_id=row["stop_id"].strip(),
                stop_sequence=int(row["stop_sequence"]),
                scheduled_arrival_s=parse_clock_s(row["arrival_time"]),
            )
        except (KeyError, ValueError, TypeError):
            rep.drop("malformed row")
            continue
        if st.trip_id not in trips:
            rep.drop("unknown trip_id")
            continue
        if st.stop_id not in stops:
            rep.drop("unknown stop_id")
            continue
        raw_sts.append(st)
    # stop_sequence must be strictly increasing within a trip; duplicate
    # sequence numbers are dropped, order is otherwise taken from the field.
    by_trip: dict[str, list[GtfsStopTime]] = defaultdict(list)
    for st in raw_sts:
        by_trip[st.trip_id].append(st)
    stop_times: list[GtfsStopTime] = []
    for tid in sorted(by_trip):
        seen_seq = set()
        for st in sorted(by_trip[tid], key=lambda r: r.stop_sequence):
            if st.stop_sequence in seen_seq:
                rep.drop("duplicate stop_sequence")
                continue
            seen_seq.add(st.stop_sequence)
            stop_times.append(st)
    reports.append(rep)

    bundle = GtfsBundle(
        stops=stops, route_ids=route_ids, trips=trips, stop_times=stop_times, shapes=shapes
    )
    return bundle, reports


def parse_smartcard(file: str | Path) -> tuple[list[BoardingRecord], FileReport]:
    """Parse the smart-card CSV; absent trip/stop fields are preserved as None."""
    path = Path(file)
    if not path.exists():
        raise IngestError(f"missing smart-card file: {path}")
    report = FileReport(file=path.name)
    records: list[BoardingRecord] = []
    with open(path, newline="", encoding="utf-8-sig") as fh:
        for row in csv.DictReader(fh):
            report.rows_read += 1
            try:
                ts = parse_timestamp(row["boarding_time"])
            except (KeyError, ValueError, TypeError):
                report.drop("unparseable timestamp")
                continue
            trip_id = (row.get("trip_id") or "").strip() or None
            stop_id = (row.get("boarding_stop_id") or "").strip() or None
            records.append(
                BoardingRecord(
                    card_id=(row.get("card_id") or "").strip(),
                    trip_id=trip_id,
                    boarding_stop_id=stop_id,
                    boarding_time=ts,
                )
            )
    return records, report


def clean_boardings(records: list[BoardingRecord]) -> list[BoardingRecord]:
    """Keep records having both a trip ID and a boarding stop; drop exact
    duplicate taps (same card, trip, stop, timestamp)."""
    seen: set[tuple] = set()
    kept: list[BoardingRecord] = []
    for rec in records:
        if rec.trip_id is None or rec.boarding_stop_id is None:
            continue
        key = (rec.card_id, rec.trip_id, rec.boarding_stop_id, rec.boarding_time)
        if key in seen:
            continue
        seen.add(key)
        kept.append(rec)
    return kept


@dataclass
class JoinReport:
    input_count: int = 0
    matched: int = 0
    dropped_unmatched: int = 0
    discarded_early: int = 0

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "matched": self.matched,
            "dropped_unmatched": self.dropped_unmatched,
            "discarded_early": self.discarded_early,
        }


def join_lateness(
    records: list[BoardingRecord], gtfs: GtfsBundle
) -> tuple[list[LatenessSample], JoinReport]:
    """Join cleaned boardings to scheduled arrivals and compute lateness.

    Lateness is boarding time minus scheduled arrival, in seconds; negative
    values (early arrivals) are discarded. When a trip visits the same stop
    more than once, the stop_time closest in time to the boarding wins.
    """
    report = JoinReport(input_count=len(records))
    sched: dict[tuple[str, str], list[tuple[int, int]]] = defaultdict(list)
    for st in gtfs.stop_times:
        sched[(st.trip_id, st.stop_id)].append((st.scheduled_arrival_s, st.stop_sequence))

    samples: list[LatenessSample] = []
    for rec in records:
        key = (rec.trip_id, rec.boarding_stop_id)
        candidates = sched.get(key)
        if not candidates:
            report.dropped_unmatched += 1
            continue
        at = rec.boarding_time.seconds
        scheduled_s, _ = min(candidates, key=lambda c: (abs(at - c[0]), c[1]))
        lateness = at - scheduled_s
        if lateness < 0:
            report.discarded_early += 1
            continue
        report.matched += 1
        samples.append(
            LatenessSample(
                line_id=gtfs.trips[rec.trip_id].route_id,
                trip_id=rec.trip_id,
                stop_id=rec.boarding_stop_id,
                timestamp=rec.boarding_time,
                scheduled_s=scheduled_s,
                actual_s=at,
                lateness_s=lateness,
            )
        )
    return samples, report


def parse_pois(file: str | Path) -> tuple[PoiSet, FileReport]:
    """Parse a GeoJSON FeatureCollection of typed points into a PoiSet."""
    path = Path(file)
    if not path.exists():
        raise IngestError(f"missing POI file: {path}")
    report = FileReport(file=path.name)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    pois = PoiSet()
    for feature in doc.get("features", []):
        report.rows_read += 1
        geom = feature.get("geometry") or {}
        if geom.get("type") != "Point":
            report.drop("non-point geometry")
            continue
        kind = (feature.get("properties") or {}).get("kind")
        attr = _POI_ATTR.get(kind)
        if attr is None:
            report.drop("unknown kind")
            continue
        try:
            lon, lat = float(geom["coordinates"][0]), float(geom["coordinates"][1])
        except (KeyError, IndexError, ValueError, TypeError):
            report.drop("malformed coordinates")
            continue
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            report.drop("coordinates out of range")
            continue
        getattr(pois, attr).append((lat, lon))
    return pois, report
