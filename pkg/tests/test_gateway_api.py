import re

import pytest
from fastapi.testclient import TestClient

from pillcase.gateway import create_app

WEIGHT_RE = re.compile(r"^\d{2}\.\d$")


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path / "gw")
    with TestClient(app) as c:
        yield c


def register(client, **overrides):
    body = dict(pills=5, noise_sigma=0.0, tare_range=0.0)
    body.update(overrides)
    r = client.post("/devices", json=body)
    assert r.status_code == 201, r.text
    return r.json()["device_id"]


def prescribe(client, did, dose=1):
    r = client.put(
        f"/devices/{did}/prescription",
        json={"medicine_id": "tylenol", "recommended_dose": dose},
    )
    assert r.status_code == 200, r.text
    return r.json()


def act(client, did, action, **kw):
    r = client.post(f"/devices/{did}/action", json={"action": action, **kw})
    assert r.status_code == 200, r.text
    return r.json()


def cycle(client, did, remove=None):
    act(client, did, "open")
    if remove:
        act(client, did, "remove", n=remove)
    act(client, did, "close")


def test_catalog(client):
    r = client.get("/catalog")
    assert r.status_code == 200
    meds = r.json()["medicines"]
    assert {"medicine_id": "tylenol", "name": "Tylenol", "unit_weight": 4.45} in meds


def test_full_flow_over_http(client):
    did = register(client)
    listed = client.get("/devices").json()
    assert [d["device_id"] for d in listed] == [did]

    prescribe(client, did)
    cycle(client, did)
    r = client.post(f"/devices/{did}/scan")
    assert r.status_code == 200
    first = r.json()
    assert first["calibrated"] is True
    assert WEIGHT_RE.match(first["current_weight"])

    cycle(client, did, remove=1)
    second = client.post(f"/devices/{did}/scan").json()
    assert second["doses_taken"] == 1
    assert second["verdict"]["kind"] == "correct"
    assert second["verdict"]["message"] == "Correct amount taken"
    assert second["previous_weight"] == first["current_weight"]

    r = client.get(f"/devices/{did}/events", params={"since": 0})
    events = r.json()["events"]
    assert [e["event_id"] for e in events] == [1, 2]
    for e in events:
        assert WEIGHT_RE.match(e["previous_weight"])
        assert WEIGHT_RE.match(e["current_weight"])
        assert e["prescription"]["medicine_id"] == "tylenol"
    assert client.get(f"/devices/{did}/events", params={"since": 1}).json()[
        "events"
    ][0]["event_id"] == 2

    status = client.get(f"/devices/{did}/status").json()
    assert status["pill_count"] == 4
    assert status["session_calibrated"] is True
    assert status["last_event_id"] == 2


def test_error_envelope_shapes(client):
    r = client.get("/devices/ghost/status")
    assert r.status_code == 404
    assert r.json()["error"]["code"] == "unknown-device"

    did = register(client)
    r = client.post(f"/devices/{did}/scan")
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "no-prescription"

    prescribe(client, did)
    act(client, did, "open")
    r = client.post(f"/devices/{did}/scan")
    assert r.status_code == 409
    body = r.json()
    assert body["error"]["code"] == "lid-open"
    assert "lid" in body["error"]["message"]

    r = client.post(f"/devices/{did}/action", json={"action": "remove", "n": 99})
    assert r.status_code == 409
    assert r.json()["error"]["code"] == "pill-underflow"


def test_request_validation_uses_envelope(client):
    r = client.post("/devices", json={"pills": -2})
    assert r.status_code == 422
    assert r.json()["error"]["code"] == "validation"
    did = register(client)
    r = client.post(f"/devices/{did}/action", json={"action": "levitate"})
    assert r.status_code == 422
    assert r.json()["error"]["code"] == "validation"
    r = client.put(
        f"/devices/{did}/prescription",
        json={"medicine_id": "tylenol", "recommended_dose": 0},
    )
    assert r.status_code == 422


def test_unknown_medicine_rejected(client):
    did = register(client)
    r = client.put(
        f"/devices/{did}/prescription",
        json={"medicine_id": "unobtainium", "recommended_dose": 1},
    )
    assert r.status_code == 422
    assert r.json()["error"]["code"] == "invalid-prescription"


def test_restart_at_http_level(tmp_path):
    app1 = create_app(tmp_path / "gw")
    with TestClient(app1) as c1:
        did = register(c1)
        prescribe(c1, did)
        cycle(c1, did)
        c1.post(f"/devices/{did}/scan")
        cycle(c1, did, remove=1)
        before = c1.post(f"/devices/{did}/scan").json()

    app2 = create_app(tmp_path / "gw")
    with TestClient(app2) as c2:
        events = c2.get(f"/devices/{did}/events").json()["events"]
        assert [e["event_id"] for e in events] == [1, 2]
        cycle(c2, did, remove=1)
        after = c2.post(f"/devices/{did}/scan").json()
        assert after["previous_weight"] == before["current_weight"]
        assert after["event_id"] == 3


def test_dataset_endpoint(client):
    did = register(client, pills=9)
    prescribe(client, did)
    cycle(client, did)
    client.post(f"/devices/{did}/scan")
    for _ in range(2):
        cycle(client, did, remove=1)
        client.post(f"/devices/{did}/scan")
    r = client.get(f"/devices/{did}/dataset")
    assert r.status_code == 200
    body = r.json()
    assert len(body["features"]) == 2
    assert len(body["features"][0]) == 10
    assert body["labels"] == [1.0, 1.0]

    empty = register(client, device_id="empty-case")
    prescribe(client, empty)
    r = client.get(f"/devices/{empty}/dataset")
    assert r.status_code == 422
    assert r.json()["error"]["code"] == "insufficient-data"
