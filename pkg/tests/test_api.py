"""
API endpoint tests.
"""

import pytest
from httpx import ASGITransport, AsyncClient

from metaridge.main import app
from metaridge.services.cache_service import cache_service

pytestmark = pytest.mark.api


@pytest.fixture
async def client():
    """Create test client."""
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as client:
        yield client


@pytest.fixture
async def empty_cache():
    await cache_service.clear()
    yield cache_service
    await cache_service.clear()


TINY_CONFIG = {
    "name": "tiny",
    "p": 4,
    "n_schedule": 6,
    "L": 4,
    "n_new": [4],
    "runs": 1,
    "omega": {"kind": "tridiagonal", "a": 3.0, "b": 1.0},
    "lambda_rule": {"kind": "scaled_optimal", "c": 1.0},
    "estimator": {"kind": "identity"},
    "surrogate_min_dim": 16,
    "m_test": 20,
}


class TestHealthEndpoints:

    @pytest.mark.asyncio
    async def test_health(self, client):
        response = await client.get("/v1/health")
        assert response.status_code == 200
        data = response.json()
        assert data["status"] == "healthy"
        assert data["cache_connection"] is True
        assert "X-Request-ID" in response.headers

    @pytest.mark.asyncio
    async def test_detailed_health(self, client):
        response = await client.get("/v1/health/detailed")
        assert response.status_code == 200
        data = response.json()
        assert {"health", "metrics", "cache_stats", "configuration"} <= set(data)

    @pytest.mark.asyncio
    async def test_liveness(self, client):
        response = await client.get("/v1/alive")
        assert response.status_code == 200
        assert response.json()["status"] == "alive"

    @pytest.mark.asyncio
    async def test_root(self, client):
        response = await client.get("/")
        assert response.status_code == 200
        assert response.json()["health"] == "/v1/health"

    @pytest.mark.asyncio
    async def test_metrics(self, client):
        await client.get("/v1/alive")
        response = await client.get("/metrics")
        assert response.status_code == 200
        assert "text/plain" in response.headers["content-type"]


class TestRiskEndpoints:

    @pytest.mark.asyncio
    async def test_mp_law_risk(self, client):
        response = await client.post("/v1/risk/mp-law", json={"lambda": 3.0, "gamma": 2.0, "sigma2": 1.5})
        assert response.status_code == 200
        data = response.json()
        assert data["risk"] == pytest.approx(2.32288, abs=1e-5)
        assert data["optimal_lambda"] == 3.0
        assert data["optimal_risk"] == pytest.approx(data["risk"], rel=1e-12)

    @pytest.mark.asyncio
    async def test_mp_law_rejects_non_positive_lambda(self, client):
        response = await client.post("/v1/risk/mp-law", json={"lambda": 0.0, "gamma": 2.0, "sigma2": 1.5})
        assert response.status_code == 422
        assert response.json()["error"] == "ValidationError"

    @pytest.mark.asyncio
    async def test_risk_curve_from_preset(self, client):
        response = await client.post(
            "/v1/risk/curve", json={"preset": "desk-risk-curve", "lambda_min": 0.5, "lambda_max": 6.0, "points": 12}
        )
        assert response.status_code == 200
        data = response.json()
        assert data["failed_points"] == 0
        assert len(data["points"]) == 12
        best = min(data["points"], key=lambda point: point["risk"])
        assert best["lambda"] == pytest.approx(3.0)

    @pytest.mark.asyncio
    async def test_risk_curve_needs_grid(self, client):
        response = await client.post("/v1/risk/curve", json={"preset": "desk-risk-curve"})
        assert response.status_code == 422

    @pytest.mark.asyncio
    async def test_unknown_preset(self, client):
        response = await client.post("/v1/risk/curve", json={"preset": "nope", "lambda_grid": [1.0, 2.0]})
        assert response.status_code == 422
        assert response.json()["error"] == "ConfigError"


class TestExperimentEndpoints:

    @pytest.mark.asyncio
    async def test_simulate_then_cached(self, client, empty_cache):
        first = await client.post("/v1/experiments/simulate", json={"config": TINY_CONFIG})
        assert first.status_code == 200
        body = first.json()
        assert body["cached"] is False
        assert [row["n_new"] for row in body["rows"]] == [4]
        assert body["rows"][0]["risk_estimated"] == pytest.approx(body["rows"][0]["risk_identity"])

        second = await client.post("/v1/experiments/simulate", json={"config": TINY_CONFIG})
        assert second.status_code == 200
        assert second.json()["cached"] is True
        assert second.json()["rows"] == body["rows"]

    @pytest.mark.asyncio
    async def test_simulate_without_cache(self, client, empty_cache):
        payload = {"config": TINY_CONFIG, "use_cache": False}
        await client.post("/v1/experiments/simulate", json=payload)
        response = await client.post("/v1/experiments/simulate", json=payload)
        assert response.json()["cached"] is False

    @pytest.mark.asyncio
    async def test_simulate_needs_exactly_one_source(self, client):
        response = await client.post("/v1/experiments/simulate", json={"config": TINY_CONFIG, "preset": "desk-risk-curve"})
        assert response.status_code == 422

        response = await client.post("/v1/experiments/simulate", json={})
        assert response.status_code == 422

    @pytest.mark.asyncio
    async def test_simulate_rejects_inconsistent_schedule(self, client):
        config = dict(TINY_CONFIG, n_schedule=[6, 6, 6])
        response = await client.post("/v1/experiments/simulate", json={"config": config})
        assert response.status_code == 422
        assert response.json()["error"] == "ValidationError"
