import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from lateroute.pipeline import run_all
from lateroute.service import create_app
from lateroute.workspace import load_config

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schemas"


def validator_for(schema_name: str):
    import jsonschema
    from referencing import Registry, Resource

    registry = Registry()
    for path in SCHEMA_DIR.glob("*.schema.json"):
        resource = Resource.from_contents(json.loads(path.read_text()))
        registry = registry.with_resource(uri=path.name, resource=resource)
    schema = json.loads((SCHEMA_DIR / schema_name).read_text())
    return jsonschema.Draft202012Validator(schema, registry=registry)


def assert_valid(schema_name: str, payload) -> None:
    validator_for(schema_name).validate(payload)


@pytest.fixture(scope="module")
def workspace_config(tmp_path_factory):
    root = tmp_path_factory.mktemp("service_ws")
    config_path = root / "config.json"
    config_path.write_text(
        json.dumps(
            {
                "seed": 17,
                "output_dir": "ws",
                "synth": {
                    "rows": 3,
                    "cols": 12,
                    "n_routes": 15,
                    "stop_every_blocks": 1,
                    "boardings_per_stop_per_day": 60,
                    "n_days": 2,
                    "headway_min": 30,
                    "corridors": [
                        {
                            "axis": "row",
                            "index": 1,
                            "start": 4,
                            "end": 8,
                            "delay_s": 120.0,
                            "periods": ["morning"],
                        }
                    ],
                },
                "model": {
                    "pretrain": True,
                    "hyperparameters": {"max_epochs": 60, "patience": 10, "pretrain_epochs": 30},
                },
            }
        )
    )
    config = load_config(config_path)
    run_all(config)
    return config


@pytest.fixture(scope="module")
def client(workspace_config):
    return TestClient(create_app(workspace_config))


class TestHealth:
    def test_ok(self, client):
        resp = client.get("/api/health")
        assert resp.status_code == 200
        assert_valid("api_health.schema.json", resp.json())


class TestRoutes:
    def test_list_shape(self, client):
        resp = client.get("/api/routes")
        assert resp.status_code == 200
        doc = resp.json()
        assert_valid("api_routes.schema.json", doc)
        assert len(doc["routes"]) == 15
        for route in doc["routes"]:
            assert set(route["periods"]) == {
                "morning",
                "noon",
                "afternoon",
                "evening",
                "night",
            }

    def test_corridor_route_flagged_changed(self, client):
        doc = client.get("/api/routes").json()
        h01 = next(r for r in doc["routes"] if r["route_id"] == "H01")
        assert h01["periods"]["morning"]["changed"] is True
        assert h01["periods"]["morning"]["improvement_pct"] > 0

    def test_detail_with_geometry(self, client):
        resp = client.get("/api/routes/H01", params={"period": "morning"})
        assert resp.status_code == 200
        doc = resp.json()
        assert_valid("api_route_suggestion.schema.json", doc)
        assert doc["original_geometry"]["type"] == "LineString"
        assert doc["proposed_geometry"]["coordinates"]

    def test_unknown_route_404(self, client):
        resp = client.get("/api/routes/NOPE")
        assert resp.status_code == 404
        assert_valid("api_error.schema.json", resp.json())

    def test_bad_period_422(self, client):
        resp = client.get("/api/routes/H01", params={"period": "rush"})
        assert resp.status_code == 422
        assert_valid("api_error.schema.json", resp.json())

    def test_identical_request_identical_bytes(self, client):
        a = client.get("/api/routes").content
        b = client.get("/api/routes").content
        assert a == b


class TestDistribution:
    def test_shape(self, client):
        resp = client.get("/api/distribution", params={"period": "morning"})
        assert resp.status_code == 200
        doc = resp.json()
        assert_valid("api_distribution.schema.json", doc)
        assert doc["period"] == "morning"
        assert doc["changed_fraction"] > 0

    def test_default_period(self, client):
        assert client.get("/api/distribution").json()["period"] == "morning"


class TestEmbedding:
    def test_five_labeled_points(self, client):
        resp = client.get("/api/embedding")
        assert resp.status_code == 200
        doc = resp.json()
        assert_valid("api_embedding.schema.json", doc)
        labels = [p["period"] for p in doc["points"]]
        assert labels == ["morning", "noon", "afternoon", "evening", "night"]


class TestWhatIf:
    def test_interior_stop_removal(self, client):
        body = {"route_id": "H01", "period": "morning", "remove_stop_index": 5}
        resp = client.post("/api/whatif", json=body)
        assert resp.status_code == 200
        doc = resp.json()
        assert_valid("api_whatif_response.schema.json", doc)
        assert doc["cost_delta"] >= 0
        assert len(doc["suggestion"]["stop_ids"]) == 11

    def test_endpoint_index_422(self, client):
        body = {"route_id": "H01", "period": "morning", "remove_stop_index": 0}
        resp = client.post("/api/whatif", json=body)
        assert resp.status_code == 422
        assert_valid("api_error.schema.json", resp.json())

    def test_unknown_route_404(self, client):
        body = {"route_id": "ZZ", "period": "morning", "remove_stop_index": 1}
        assert client.post("/api/whatif", json=body).status_code == 404

    def test_stateless(self, client, workspace_config):
        before = (Path(workspace_config.output_dir) / "suggestions.json").read_bytes()
        client.post(
            "/api/whatif",
            json={"route_id": "H01", "period": "morning", "remove_stop_index": 3},
        )
        after = (Path(workspace_config.output_dir) / "suggestions.json").read_bytes()
        assert before == after


class TestStaticUi:
    def test_ui_mounted_when_built(self, workspace_config):
        frontend = Path(__file__).resolve().parent.parent / "frontend"
        if not (frontend / "dist" / "main.js").exists():
            pytest.skip("frontend not built")
        ui_client = TestClient(create_app(workspace_config, ui_dir=str(frontend)))
        resp = ui_client.get("/")
        assert resp.status_code == 200
        assert "lateroute planner" in resp.text
        # API routes still win over the static mount.
        assert ui_client.get("/api/health").status_code == 200


class TestReorder:
    def test_small_route_reordered(self, client):
        resp = client.post("/api/reorder", json={"route_id": "V00", "period": "noon"})
        assert resp.status_code == 200
        doc = resp.json()
        assert_valid("api_reorder_response.schema.json", doc)
        assert len(doc["order_stop_ids"]) == 3

    def test_too_many_stops_422(self, client):
        resp = client.post("/api/reorder", json={"route_id": "H01", "period": "noon"})
        assert resp.status_code == 422
        assert_valid("api_error.schema.json", resp.json())
