import pytest
from fastapi.testclient import TestClient

from tick_drift import settings
from tick_drift.api_server import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as client:
        yield client


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["kernels_ready"] is True


def test_index(client):
    resp = client.get("/")
    assert resp.status_code == 200
    assert "Tick Drift Lab" in resp.text


def test_classify_lmsd(client):
    resp = client.post("/api/classify", json={"model": {"kind": "lmsd", "hurst": 0.9}})
    assert resp.status_code == 200
    body = resp.json()
    assert body["gamma"] == pytest.approx(0.9)
    assert body["family"] == "fbm_increment"
    assert body["scale_known"] is False


def test_classify_poisson_has_known_scale(client):
    body = client.post("/api/classify", json={"model": {"kind": "poisson", "rate": 2.0}}).json()
    assert body["limit_variance"] == pytest.approx(0.25)


def test_classify_model_errors(client):
    resp = client.post("/api/classify", json={"model": {"kind": "acd", "omega": 0.1, "alpha": 0.3, "beta": 0.8}})
    assert resp.status_code == 422
    assert "StationarityError" in resp.json()["detail"]
    boundary = {"kind": "lmsd", "hurst": 0.75, "sigma_fn": {"kind": "square"}}
    assert client.post("/api/classify", json={"model": boundary}).status_code == 422


def test_classify_rejects_unknown_fields(client):
    resp = client.post("/api/classify", json={"model": {"kind": "poisson", "rate": 1.0, "speed": 3}})
    assert resp.status_code == 422


def test_experiment_endpoint(client):
    config = {
        "scenario_id": "api",
        "model": {"kind": "poisson", "rate": 1.0},
        "mu": 0.05,
        "n_grid": [256, 512],
        "replicates": 50,
        "master_seed": 3,
    }
    resp = client.post("/api/experiments/s2", json=config)
    assert resp.status_code == 200
    body = resp.json()
    assert body["kind"] == "s2"
    metrics = {row["metric"] for row in body["rows"]}
    assert {"s2_mean", "s2_sd", "s2_target"} <= metrics


def test_unknown_experiment(client):
    config = {"scenario_id": "api", "model": {"kind": "poisson", "rate": 1.0}}
    assert client.post("/api/experiments/bogus", json=config).status_code == 404


def test_experiment_replicates_are_capped(client, monkeypatch):
    monkeypatch.setattr(settings, "API_MAX_REPLICATES", 10)
    config = {"scenario_id": "api", "model": {"kind": "poisson", "rate": 1.0}, "replicates": 11}
    resp = client.post("/api/experiments/s2", json=config)
    assert resp.status_code == 400
    assert "API limit" in resp.json()["detail"]
