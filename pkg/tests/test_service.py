"""HTTP service surface: request validation, payloads, error mapping."""

import pytest
from fastapi.testclient import TestClient

from peergrid.service import create_app

from .conftest import copper_plate_feeder, two_node_feeder


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["solver"] == "CLARABEL"


def test_scenario_listing(client):
    names = client.get("/scenarios").json()["scenarios"]
    assert {"ieee13_pre", "ieee13_coord_attack", "ieee13_lineout"} <= set(names)


def test_solve_bundled(client):
    resp = client.post("/solve", json={"scenario": {"scenario": "ieee13_pre"}})
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "optimal"
    assert body["exit_code"] == 0
    lo, hi = body["dlmp_range_usd_per_mwh"]
    assert 34.0 <= lo <= hi <= 39.0


def test_solve_inline_scenario(client):
    feeder = two_node_feeder(p_kw=400.0)
    req = {
        "scenario": {
            "feeder": feeder,
            "agents": {"prosumers": [], "consumers": []},
            "substation_usd_per_mwh": 42.0,
            "name": "inline-2node",
        }
    }
    body = client.post("/solve", json=req).json()
    assert body["status"] == "optimal"
    assert body["scenario"] == "inline-2node"
    assert body["objective_usd"] == pytest.approx(42.0 * 0.4, rel=1e-2)


def test_solve_with_extra_attacks_on_bundled(client):
    req = {
        "scenario": {
            "scenario": "ieee13_pre",
            "attacks": [{"kind": "price_tamper", "target": "pv13", "param": 45.0}],
        }
    }
    body = client.post("/solve", json=req).json()
    assert body["status"] == "optimal"
    assert "price_tamper:pv13->45" in body["attacks_applied"]


def test_infeasible_is_still_http_200(client):
    feeder = two_node_feeder(p_kw=1000.0, s_limit=300.0)
    req = {
        "scenario": {"feeder": feeder, "agents": {"prosumers": [], "consumers": []}},
        "options": {"shedding": False},
    }
    resp = client.post("/solve", json=req)
    assert resp.status_code == 200
    assert resp.json()["status"] == "infeasible"
    assert resp.json()["exit_code"] == 2


def test_unknown_bundled_scenario_is_400(client):
    resp = client.post("/solve", json={"scenario": {"scenario": "nope"}})
    assert resp.status_code == 400
    assert "unknown bundled scenario" in resp.json()["detail"]


def test_bad_feeder_is_400(client):
    feeder = two_node_feeder()
    feeder["lines"][0]["R"][0][0] = -1.0
    req = {"scenario": {"feeder": feeder, "agents": {"prosumers": [], "consumers": []}}}
    resp = client.post("/solve", json=req)
    assert resp.status_code == 400
    assert "1-2" in resp.json()["detail"]


def test_missing_parts_is_422(client):
    resp = client.post("/solve", json={"scenario": {"horizon": 1}})
    assert resp.status_code == 422


def test_compare_endpoint(client):
    req = {
        "pre": {"scenario": "ieee13_pre"},
        "post": {"scenario": "ieee13_lineout"},
    }
    resp = client.post("/compare", json=req)
    assert resp.status_code == 200
    body = resp.json()
    assert body["pre"]["status"] == "optimal"
    assert body["post"]["status"] == "optimal"
    assert 1.0 <= body["delta"]["curtailment_delta_mw"] <= 2.5


def test_compare_mismatched_agents_is_400(client):
    feeder = copper_plate_feeder({2: {"a": {"p": 100.0, "q": 0.0}}})
    other = {
        "feeder": feeder,
        "agents": {
            "prosumers": [],
            "consumers": [{"id": "alien", "node": 2, "phases": ["a"],
                           "demand_source": "feeder"}],
        },
    }
    resp = client.post("/compare", json={"pre": {"scenario": "ieee13_pre"}, "post": other})
    assert resp.status_code == 400
    assert "mismatched" in resp.json()["detail"]
