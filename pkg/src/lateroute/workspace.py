"""Pipeline configuration and on-disk workspace artifacts.

Every artifact is a plain file with a sidecar meta JSON recording the stage
and the hash of the config that produced it; reading an artifact written
under a different config fails so stale results are never silently reused.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path


class MissingArtifactError(RuntimeError):
    def __init__(self, name: str, stage: str):
        super().__init__(
            f"missing artifact {name!r}: run the {stage!r} stage first"
        )
        self.artifact = name
        self.stage = stage


class StaleArtifactError(RuntimeError):
    def __init__(self, name: str, stage: str):
        super().__init__(
            f"artifact {name!r} was built under a different config; rerun the {stage!r} stage"
        )
        self.artifact = name
        self.stage = stage


@dataclass
class PipelineConfig:
    seed: int
    output_dir: Path
    gtfs_dir: Path | None
    smartcard_csv: Path | None
    poi_geojson: Path | None
    network: dict
    model: dict
    synth: dict | None
    deterministic: bool = False
    raw: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        doc = dict(self.raw)
        doc["seed"] = self.seed
        return hashlib.sha256(
            json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest()


DEFAULT_NETWORK_PARAMS = {
    "snap_grid_m": 5.0,
    "poi_buffer_m": 25.0,
    "stop_max_snap_m": 50.0,
}


def load_config(path: str | Path, seed_override: int | None = None) -> PipelineConfig:
    """Read a config JSON; relative paths resolve against the config file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    raw = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent

    def resolve(p: str | None) -> Path | None:
        if p is None:
            return None
        q = Path(p)
        return q if q.is_absolute() else (base / q)

    inputs = raw.get("inputs", {})
    seed = int(seed_override if seed_override is not None else raw.get("seed", 0))
    network = {**DEFAULT_NETWORK_PARAMS, **raw.get("network", {})}
    cfg = PipelineConfig(
        seed=seed,
        output_dir=resolve(raw.get("output_dir", "workspace")),
        gtfs_dir=resolve(inputs.get("gtfs_dir")),
        smartcard_csv=resolve(inputs.get("smartcard_csv")),
        poi_geojson=resolve(inputs.get("poi_geojson")),
        network=network,
        model=raw.get("model", {}),
        synth=raw.get("synth"),
        raw=raw,
    )
    return cfg


ARTIFACTS = {
    "parse_report": ("parse_report.json", "ingest"),
    "lateness_samples": ("lateness_samples.csv", "ingest"),
    "graph": ("graph.json", "build-graph"),
    "routes": ("routes.json", "build-graph"),
    "dataset": ("dataset.csv", "label"),
    "dataset_meta": ("dataset_meta.json", "label"),
    "model": ("model.json", "train"),
    "train_report": ("train_report.json", "train"),
    "weights_morning": ("weights_morning.json", "weigh"),
    "weights_noon": ("weights_noon.json", "weigh"),
    "weights_afternoon": ("weights_afternoon.json", "weigh"),
    "weights_evening": ("weights_evening.json", "weigh"),
    "weights_night": ("weights_night.json", "weigh"),
    "suggestions": ("suggestions.json", "suggest"),
    "distribution": ("distribution.json", "rank"),
}


class Workspace:
    """Artifact store under the config's output directory."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.dir = Path(config.output_dir)

    def path(self, name: str) -> Path:
        filename, _ = ARTIFACTS[name]
        return self.dir / filename

    def _meta_path(self, name: str) -> Path:
        return self.dir / (ARTIFACTS[name][0] + ".meta.json")

    def exists(self, name: str) -> bool:
        return self.path(name).exists() and self._meta_path(name).exists()

    def is_fresh(self, name: str) -> bool:
        if not self.exists(name):
            return False
        meta = json.loads(self._meta_path(name).read_text(encoding="utf-8"))
        return meta.get("config_hash") == self.config.config_hash

    def check(self, name: str) -> Path:
        """Path of a required artifact; raises if missing or stale."""
        filename, stage = ARTIFACTS[name]
        if not self.exists(name):
            raise MissingArtifactError(filename, stage)
        if not self.is_fresh(name):
            raise StaleArtifactError(filename, stage)
        return self.path(name)

    def mark(self, name: str, extra: dict | None = None) -> None:
        _, stage = ARTIFACTS[name]
        meta = {"stage": stage, "config_hash": self.config.config_hash}
        if extra:
            meta.update(extra)
        self._meta_path(name).write_text(
            json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8"
        )

    def write_json(self, name: str, payload: dict, extra_meta: dict | None = None) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.path(name)
        path.write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        self.mark(name, extra_meta)
        return path

    def read_json(self, name: str) -> dict:
        return json.loads(self.check(name).read_text(encoding="utf-8"))

    def read_meta(self, name: str) -> dict:
        self.check(name)
        return json.loads(self._meta_path(name).read_text(encoding="utf-8"))
