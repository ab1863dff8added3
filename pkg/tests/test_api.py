from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from reqboard.api import create_app
from reqboard.config import Config
from reqboard.engine import ForumEngine
from reqboard.model import Role
from reqboard.store import MemoryStore
from reqboard.templates import DEFAULT_OPINION_TEMPLATE_ID

from conftest import TickingClock

OPINION_FIELDS = {
    "title": "Add full text search",
    "problem": "Finding older topics takes forever",
    "rationale": "Analysts triage faster with search",
}


@pytest.fixture
def service():
    engine = ForumEngine(MemoryStore(), Config(), clock=TickingClock())
    engine.register_stakeholder("ana", "analyst-pw", Role.MANAGEMENT)
    engine.register_stakeholder("uli", "user-pw", Role.GENERAL)
    return engine, TestClient(create_app(engine))


def login(client, handle, secret) -> dict:
    res = client.post("/api/v1/auth/login", json={"handle": handle, "secret": secret})
    assert res.status_code == 200, res.text
    return {"Authorization": f"Bearer {res.json()['token']}"}


def test_login_and_me(service):
    _, client = service
    headers = login(client, "ana", "analyst-pw")
    me = client.get("/api/v1/users/me", headers=headers)
    assert me.status_code == 200
    assert me.json()["role"] == "MANAGEMENT"
    assert "secret_hash" not in me.json()


def test_bad_credentials_and_missing_token(service):
    _, client = service
    res = client.post("/api/v1/auth/login", json={"handle": "ana", "secret": "nope"})
    assert res.status_code == 401
    assert res.json()["code"] == "BAD_CREDENTIALS"
    res = client.get("/api/v1/topics")
    assert res.status_code == 401
    assert res.json()["code"] == "UNAUTHENTICATED"
    res = client.get("/api/v1/topics", headers={"Authorization": "Bearer bogus"})
    assert res.status_code == 401


def test_topic_pipeline_over_http(service):
    _, client = service
    ana = login(client, "ana", "analyst-pw")
    uli = login(client, "uli", "user-pw")

    res = client.post(
        "/api/v1/topics",
        json={"kind": "OPINION", "template_id": DEFAULT_OPINION_TEMPLATE_ID, "fields": OPINION_FIELDS},
        headers=uli,
    )
    assert res.status_code == 200, res.text
    topic = res.json()
    assert topic["state"] == "NEW"
    assert topic["allowed_events"] == []  # general users drive nothing

    seen_by_analyst = client.get(f"/api/v1/topics/{topic['id']}", headers=ana).json()
    assert seen_by_analyst["allowed_events"] == ["CANCEL_DUPLICATE", "OPEN_FOR_SUGGESTIONS"]

    # missing mandatory items -> full violation list, nothing stored
    res = client.post(
        "/api/v1/topics",
        json={"kind": "OPINION", "template_id": DEFAULT_OPINION_TEMPLATE_ID, "fields": {"title": "x"}},
        headers=uli,
    )
    assert res.status_code == 422
    body = res.json()
    assert body["code"] == "TEMPLATE_VIOLATIONS"
    assert {v["item"] for v in body["details"]["violations"]} == {"problem", "rationale"}

    # identical resubmission -> DUPLICATE with nearest matches
    res = client.post(
        "/api/v1/topics",
        json={"kind": "OPINION", "template_id": DEFAULT_OPINION_TEMPLATE_ID, "fields": OPINION_FIELDS},
        headers=uli,
    )
    assert res.status_code == 409
    body = res.json()
    assert body["code"] == "DUPLICATE"
    assert body["details"]["nearest"][0]["score"] == 1.0


def test_event_endpoint_and_errors(service):
    _, client = service
    ana = login(client, "ana", "analyst-pw")
    uli = login(client, "uli", "user-pw")
    topic = client.post(
        "/api/v1/topics",
        json={"kind": "OPINION", "template_id": DEFAULT_OPINION_TEMPLATE_ID, "fields": OPINION_FIELDS},
        headers=uli,
    ).json()

    res = client.post(
        f"/api/v1/topics/{topic['id']}/events",
        json={"event": "OPEN_FOR_SUGGESTIONS"},
        headers=uli,
    )
    assert res.status_code == 403
    assert res.json()["code"] == "FORBIDDEN"

    res = client.post(
        f"/api/v1/topics/{topic['id']}/events",
        json={"event": "UNLOCK"},
        headers=ana,
    )
    assert res.status_code == 409
    assert res.json()["code"] == "INVALID_TRANSITION"

    res = client.post(
        f"/api/v1/topics/{topic['id']}/events",
        json={"event": "OPEN_FOR_SUGGESTIONS", "expected_version": 1},
        headers=ana,
    )
    assert res.status_code == 200
    assert res.json()["state"] == "SUGGESTION_COLLECTED"

    res = client.post(
        f"/api/v1/topics/{topic['id']}/events",
        json={"event": "START_NEGOTIATION", "expected_version": 1},
        headers=ana,
    )
    assert res.status_code == 409
    assert res.json()["code"] == "STALE_VERSION"

    res = client.post(
        f"/api/v1/topics/{topic['id']}/events", json={"event": "WARP"}, headers=ana
    )
    assert res.status_code == 422
    assert res.json()["code"] == "BAD_REQUEST"

    res = client.get("/api/v1/topics/top-ghost", headers=ana)
    assert res.status_code == 404
    assert res.json()["code"] == "NOT_FOUND"


def test_posts_polls_and_aggregate_over_http(service):
    _, client = service
    ana = login(client, "ana", "analyst-pw")
    uli = login(client, "uli", "user-pw")
    topic = client.post(
        "/api/v1/topics",
        json={"kind": "OPINION", "template_id": DEFAULT_OPINION_TEMPLATE_ID, "fields": OPINION_FIELDS},
        headers=uli,
    ).json()
    client.post(f"/api/v1/topics/{topic['id']}/events", json={"event": "OPEN_FOR_SUGGESTIONS"}, headers=ana)

    assert client.post(
        f"/api/v1/topics/{topic['id']}/posts", json={"body": "first"}, headers=uli
    ).status_code == 200
    assert client.post(
        f"/api/v1/topics/{topic['id']}/posts", json={"body": "more"}, headers=uli
    ).status_code == 200

    poll = client.post(
        f"/api/v1/topics/{topic['id']}/polls",
        json={"kind": "PREFERENCE", "options": ["tabs", "spaces"]},
        headers=ana,
    ).json()
    client.post(f"/api/v1/polls/{poll['id']}/votes", json={"option": "tabs"}, headers=uli)
    tally = client.get(f"/api/v1/polls/{poll['id']}/tally", headers=uli).json()
    assert tally == {"tabs": 1, "spaces": 0}

    view = client.get(f"/api/v1/topics/{topic['id']}/aggregate", headers=ana).json()
    assert len(view["posts"]) == 1  # two submissions merged into one post
    assert len(view["posts"][0]["segments"]) == 2
    assert view["polls"][0]["tally"] == tally

    closed = client.post(f"/api/v1/polls/{poll['id']}/close", headers=ana)
    assert closed.status_code == 200
    res = client.post(f"/api/v1/polls/{poll['id']}/votes", json={"option": "tabs"}, headers=uli)
    assert res.status_code == 409
    assert res.json()["code"] == "POLL_CLOSED"


def test_guidance_and_templates_endpoints(service):
    _, client = service
    ana = login(client, "ana", "analyst-pw")
    templates = client.get("/api/v1/templates", headers=ana).json()
    assert any(t["id"] == DEFAULT_OPINION_TEMPLATE_ID for t in templates)
    guidance = client.get(
        f"/api/v1/templates/{DEFAULT_OPINION_TEMPLATE_ID}/guidance", headers=ana
    ).json()
    assert [i["id"] for i in guidance["items"]][:3] == ["title", "problem", "rationale"]

    res = client.post(
        "/api/v1/templates",
        json={
            "name": "Bug report",
            "topic_kind": "OPINION",
            "items": [
                {"id": "summary", "label": "Summary", "kind": "MANDATORY", "max_length": 80},
                {"id": "steps", "label": "Steps", "kind": "MANDATORY", "max_length": 500},
            ],
        },
        headers=ana,
    )
    assert res.status_code == 200
    assert res.json()["name"] == "Bug report"

    res = client.post(
        "/api/v1/templates",
        json={"name": "Broken", "topic_kind": "OPINION", "items": [{"id": "x"}]},
        headers=ana,
    )
    assert res.status_code == 422
    assert res.json()["code"] == "MALFORMED_TEMPLATE"


def test_export_and_config_endpoints(service):
    _, client = service
    ana = login(client, "ana", "analyst-pw")
    uli = login(client, "uli", "user-pw")
    res = client.get("/api/v1/export", headers=uli)
    assert res.status_code == 403
    doc = client.get("/api/v1/export", headers=ana)
    assert doc.status_code == 200
    assert doc.json()["topics"] == []

    cfg = client.get("/api/v1/config", headers=uli)
    assert cfg.status_code == 200
    assert cfg.json()["dedup"] == {"ngram_size": 3, "threshold": 0.6}


def test_direct_message_endpoints(service):
    engine, client = service
    ana = login(client, "ana", "analyst-pw")
    uli = login(client, "uli", "user-pw")
    ana_id = client.get("/api/v1/users/me", headers=ana).json()["id"]
    res = client.post("/api/v1/messages", json={"to": ana_id, "text": "hello"}, headers=uli)
    assert res.status_code == 200
    sequence = res.json()["sequence"]
    inbox = client.get("/api/v1/messages", headers=ana).json()["messages"]
    assert [m["sequence"] for m in inbox] == [sequence]
    assert client.get(f"/api/v1/messages?since={sequence}", headers=ana).json()["messages"] == []


def test_unknown_route_keeps_error_shape(service):
    _, client = service
    res = client.get("/api/v1/definitely-not-a-thing")
    assert res.status_code == 404
    assert res.json()["code"] == "NOT_FOUND"
