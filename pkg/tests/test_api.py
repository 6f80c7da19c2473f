"""
Test cases for the HTTP routes
"""

import pytest
from fastapi.testclient import TestClient

from main import app
from src.api import routes
from src.core.config import settings
from src.services.pipeline import PipelineService


@pytest.fixture
def client(monkeypatch, constants):
    # Session constants, so requests skip the extraction
    monkeypatch.setattr(routes, "pipeline", PipelineService(constants=constants))
    return TestClient(app)


class TestHealth:
    def test_health(self, client):
        response = client.get("/api/v1/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "healthy"
        assert body["components"]["degennes"] == "ready"

    def test_constants(self, client, constants):
        response = client.get("/api/v1/constants")
        assert response.status_code == 200
        assert response.json()["theta0"] == pytest.approx(constants.theta0, rel=1e-14)


class TestGeometry:
    """POST /geometry"""

    def test_ellipse(self, client):
        response = client.post("/api/v1/geometry", json={"kind": "ellipse", "a": 2.0, "b": 1.0})
        assert response.status_code == 200
        body = response.json()
        assert body["kappa_max"] == pytest.approx(2.0, abs=1e-8)
        assert body["symmetric"]

    def test_circle_is_rejected(self, client):
        response = client.post("/api/v1/geometry", json={"kind": "ellipse", "a": 1.0, "b": 1.0})
        assert response.status_code == 400
        assert "detail" in response.json()

    def test_invalid_body(self, client):
        response = client.post("/api/v1/geometry", json={"kind": "ellipse", "a": -1.0})
        assert response.status_code == 422

    def test_curve_outside_curves_dir(self, client, tmp_path):
        outside = tmp_path / "curve.txt"
        outside.write_text("1 0\n0 1\n-1 0\n0 -1\n")
        for path in (str(outside), "../configs/ellipse_sweep.txt"):
            response = client.post("/api/v1/geometry", json={"kind": "sampled", "path": path})
            assert response.status_code == 400

    def test_unreadable_curve(self, client, tmp_path, monkeypatch):
        (tmp_path / "broken.txt").write_text("not a curve\n")
        monkeypatch.setattr(settings, "CURVES_DIR", str(tmp_path))
        response = client.post("/api/v1/geometry", json={"kind": "sampled", "path": "broken.txt"})
        assert response.status_code == 422


class TestPrediction:
    def test_prediction(self, client):
        request = {
            "domain": {"kind": "ellipse", "a": 2.0, "b": 1.0},
            "hgrid": {"min": 0.001, "max": 0.01, "count": 20},
            "alpha0": 0.0,
        }
        response = client.post("/api/v1/prediction", json=request)
        assert response.status_code == 200
        body = response.json()
        assert len(body["h"]) == 20
        assert all(g <= e * (1 + 1e-12) for g, e in zip(body["gap_formula"], body["envelope"]))
        assert body["dominant_arc"] == "both"

    def test_bad_grid(self, client):
        request = {"hgrid": {"min": 0.01, "max": 0.001}}
        response = client.post("/api/v1/prediction", json=request)
        assert response.status_code == 422
