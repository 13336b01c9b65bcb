import json
import subprocess
import sys
from pathlib import Path

import pytest


def write_config(root: Path, **overrides) -> Path:
    doc = {
        "seed": 9,
        "output_dir": "ws",
        "synth": {
            "rows": 5,
            "cols": 5,
            "n_routes": 10,
            "boardings_per_stop_per_day": 30,
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
            "hyperparameters": {"max_epochs": 50, "patience": 8, "pretrain_epochs": 25},
        },
    }
    doc.update(overrides)
    path = root / "config.json"
    path.write_text(json.dumps(doc))
    return path


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "lateroute", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


class TestPipelineCli:
    def test_all_produces_suggestions(self, tmp_path):
        config = write_config(tmp_path)
        result = run_cli("all", "--config", str(config))
        assert result.returncode == 0, result.stderr
        suggestions = tmp_path / "ws" / "suggestions.json"
        assert suggestions.exists()
        doc = json.loads(suggestions.read_text())
        assert doc["suggestions"]

    def test_suggest_before_weigh_fails_naming_artifact(self, tmp_path):
        config = write_config(tmp_path)
        assert run_cli("synth", "--config", str(config)).returncode == 0
        assert run_cli("ingest", "--config", str(config)).returncode == 0
        assert run_cli("build-graph", "--config", str(config)).returncode == 0
        result = run_cli("suggest", "--config", str(config))
        assert result.returncode != 0
        assert "weights_morning.json" in result.stderr
        assert "weigh" in result.stderr

    def test_stage_before_dependency_fails(self, tmp_path):
        config = write_config(tmp_path)
        result = run_cli("build-graph", "--config", str(config))
        assert result.returncode != 0
        assert "parse_report.json" in result.stderr

    def test_stale_artifact_detected(self, tmp_path):
        config = write_config(tmp_path)
        assert run_cli("all", "--config", str(config)).returncode == 0
        # A different seed invalidates previously built artifacts.
        result = run_cli("suggest", "--config", str(config), "--seed", "123")
        assert result.returncode != 0
        assert "different config" in result.stderr

    def test_missing_config_fails(self, tmp_path):
        result = run_cli("all", "--config", str(tmp_path / "nope.json"))
        assert result.returncode != 0

    def test_unknown_subcommand_fails(self, tmp_path):
        config = write_config(tmp_path)
        result = run_cli("frobnicate", "--config", str(config))
        assert result.returncode != 0


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    root = tmp_path_factory.mktemp("rank_ws")
    config = write_config(root)
    assert run_cli("all", "--config", str(config)).returncode == 0
    return config


class TestRankCli:

    def test_cutoff_filters_listing(self, built):
        everything = run_cli("rank", "--config", str(built), "--period", "morning")
        filtered = run_cli(
            "rank", "--config", str(built), "--period", "morning", "--cutoff", "5"
        )
        assert everything.returncode == 0 and filtered.returncode == 0
        all_lines = [l for l in everything.stdout.splitlines() if l.startswith("  ")]
        kept_lines = [l for l in filtered.stdout.splitlines() if l.startswith("  ")]
        assert len(kept_lines) <= len(all_lines)
        for line in kept_lines:
            pct = float(line.split(":")[1].split("%")[0])
            assert pct >= 5.0

    def test_period_all_lists_five_sections(self, built):
        result = run_cli("rank", "--config", str(built), "--period", "all")
        headers = [l for l in result.stdout.splitlines() if l.startswith("[")]
        assert len(headers) == 5
