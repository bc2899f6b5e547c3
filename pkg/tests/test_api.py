"""
Tests for the HTTP API
"""

import pytest
from fastapi.testclient import TestClient

from app.main import app
from tests.conftest import forward_signature

client = TestClient(app)


def test_root():
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["message"] == "PipeScan API"


def test_health_reports_inversion_defaults():
    response = client.get("/api/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert body["eiia"]["max_iterations"] == 10


def test_bearing_disambiguation():
    response = client.post("/api/bearing", json={"detecting_bearing": 80.0, "alpha_deg": 60.0, "map_bearing": 130.0})
    assert response.status_code == 200
    body = response.json()
    assert body["chosen"] == pytest.approx(140.0)
    assert sorted(body["candidates"]) == pytest.approx([20.0, 140.0])
    assert body["tie"] is False


def test_bearing_rejects_zero_obliquity():
    response = client.post("/api/bearing", json={"detecting_bearing": 80.0, "alpha_deg": 0.0, "map_bearing": 130.0})
    assert response.status_code == 422


def test_invert_forward_signature(shallow_ellipse, wide_pivots):
    points, _ = forward_signature(shallow_ellipse, wide_pivots)
    response = client.post(
        "/api/invert",
        json={"points": points, "max_iterations": 50, "stability_epsilon_m": 1e-10, "detecting_bearing": 0.0},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["radius"] == pytest.approx(0.2, rel=0.02)
    assert body["chosen_bearing"] is None
    assert len(body["candidate_bearings"]) == 2


def test_invert_rejects_too_few_points():
    response = client.post("/api/invert", json={"points": [[0.0, 1.0], [0.1, 1.1]]})
    assert response.status_code == 422


def test_invert_rejects_unordered_points():
    points = [[0.0, 1.0], [0.1, 1.01], [0.05, 1.02], [0.3, 1.05], [0.4, 1.1], [0.5, 1.2]]
    response = client.post("/api/invert", json={"points": points})
    assert response.status_code == 422
