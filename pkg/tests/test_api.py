import pytest
from fastapi.testclient import TestClient

from conftest import perfect_test, small_policy
from sooplatform.api import create_app
from sooplatform.engine import Platform


@pytest.fixture
def client(tmp_path):
    platform = Platform(
        policy=small_policy(),
        intro_test=perfect_test(),
        log_path=tmp_path / "api.ldjson",
    )
    with TestClient(create_app(platform)) as c:
        c.platform = platform
        yield c
    platform.close()


def onboard_http(client, name="Ann", group="expert"):
    r = client.post(
        "/api/participants",
        json={"name": name, "stakeholderGroup": group, "selfEstimation": "expert"},
    )
    assert r.status_code == 201
    body = r.json()
    pid = body["participantId"]
    choices = [0] * len(body["introTest"])
    r = client.post(f"/api/participants/{pid}/intro-test", json={"choices": choices})
    assert r.status_code == 200
    return pid


class TestGoal:
    def test_define_once(self, client):
        r = client.post("/api/goal", json={"title": "Assess the network"})
        assert r.status_code == 201
        r = client.post("/api/goal", json={"title": "Again"})
        assert r.status_code == 409

    def test_soo_view(self, client):
        client.post("/api/goal", json={"title": "Assess the network"})
        r = client.get("/api/soo")
        assert r.status_code == 200
        body = r.json()
        assert body["phase"] == "structure"
        assert len(body["elements"]) == 1
        assert body["elements"][0]["kind"] == "goal"


class TestOnboardingAndStream:
    def test_register_returns_intro_test(self, client):
        client.post("/api/goal", json={"title": "Assess the network"})
        r = client.post(
            "/api/participants",
            json={
                "name": "Ann",
                "stakeholderGroup": "expert",
                "selfEstimation": "expert",
            },
        )
        assert r.status_code == 201
        body = r.json()
        assert body["participantId"].startswith("p")
        assert len(body["introTest"]) == 4
        assert all("answerIndex" not in q for q in body["introTest"])

    def test_bad_group_rejected(self, client):
        r = client.post(
            "/api/participants",
            json={"name": "X", "stakeholderGroup": "wizard", "selfEstimation": "expert"},
        )
        assert r.status_code == 400

    def test_stream_and_answers(self, client):
        client.post("/api/goal", json={"title": "Assess the network"})
        pid = onboard_http(client)
        r = client.get(f"/api/participants/{pid}/stream", params={"count": 5, "seed": 9})
        assert r.status_code == 200
        instances = r.json()["instances"]
        assert instances, "expected at least the objective-naming question"
        card = instances[0]
        assert card["type"] == "name"
        r = client.post(
            "/api/answers",
            json={
                "eiId": card["eiId"],
                "participantId": pid,
                "payload": {"kind": "name", "text": "Economy"},
            },
        )
        assert r.status_code == 202
        assert r.json()["seq"] > 0
        # repeat: 409
        r = client.post(
            "/api/answers",
            json={
                "eiId": card["eiId"],
                "participantId": pid,
                "payload": {"kind": "name", "text": "Ecology"},
            },
        )
        assert r.status_code == 409

    def test_invalid_payload_400(self, client):
        client.post("/api/goal", json={"title": "Assess the network"})
        pid = onboard_http(client)
        card = client.get(f"/api/participants/{pid}/stream").json()["instances"][0]
        r = client.post(
            "/api/answers",
            json={
                "eiId": card["eiId"],
                "participantId": pid,
                "payload": {"kind": "confirm", "choice": "yes"},
            },
        )
        assert r.status_code == 400

    def test_unknown_participant_404(self, client):
        client.post("/api/goal", json={"title": "Assess the network"})
        r = client.get("/api/participants/p9999/stream")
        assert r.status_code == 404


class TestDiscussionAndStats:
    def test_discussion_roundtrip(self, client):
        client.post("/api/goal", json={"title": "Assess the network"})
        pid = onboard_http(client)
        goal_id = client.get("/api/soo").json()["goal"]
        r = client.post(
            f"/api/elements/{goal_id}/discussion",
            json={"participantId": pid, "text": "Too broad?"},
        )
        assert r.status_code == 201
        r = client.get(f"/api/elements/{goal_id}/discussion")
        posts = r.json()["posts"]
        assert len(posts) == 1 and posts[0]["text"] == "Too broad?"

    def test_stats_counters(self, client):
        client.post("/api/goal", json={"title": "Assess the network"})
        pid = onboard_http(client)
        card = client.get(f"/api/participants/{pid}/stream").json()["instances"][0]
        client.post(
            "/api/answers",
            json={
                "eiId": card["eiId"],
                "participantId": pid,
                "payload": {"kind": "name", "text": "Economy"},
            },
        )
        stats = client.get("/api/stats").json()
        assert stats["perParticipantAnswerCount"][pid] == 1
        assert stats["platformAnswersLast24h"] == 1
        assert stats["phase"] == "structure"
        assert stats["milestoneCount"] == 0
        personal = client.get(f"/api/participants/{pid}/stats").json()
        assert personal["answeredCount"] == 1
        assert personal["competency"] == 1.0


class TestAdminAndAssess:
    def test_policy_update(self, client):
        r = client.put("/api/admin/policy", json={"validateRate": 0.8})
        assert r.status_code == 200
        assert r.json()["policy"]["validateRate"] == 0.8
        r = client.put("/api/admin/policy", json={"validateRate": 7})
        assert r.status_code == 400

    def test_assess_conflict_before_milestone(self, client):
        client.post("/api/goal", json={"title": "Assess the network"})
        r = client.post("/api/assess", json={"alternatives": []})
        assert r.status_code == 409

    def test_forced_milestone_enables_assessment(self, client):
        client.post("/api/goal", json={"title": "Assess the network"})
        pids = [onboard_http(client, name=f"P{i}") for i in range(4)]
        goal_id = client.get("/api/soo").json()["goal"]

        def answer_naming(pid, parent_id, text):
            cards = client.get(
                f"/api/participants/{pid}/stream", params={"count": 30, "seed": 3}
            ).json()["instances"]
            card = next(
                c
                for c in cards
                if c["slot"] == "child_name" and c["parentId"] == parent_id
            )
            client.post(
                "/api/answers",
                json={
                    "eiId": card["eiId"],
                    "participantId": pid,
                    "payload": {"kind": "name", "text": text},
                },
            )

        for pid in pids[:2]:
            answer_naming(pid, goal_id, "Economy")
        obj = next(
            e for e in client.get("/api/soo").json()["elements"]
            if e["kind"] == "objective"
        )
        assert obj["state"] == "validated"
        for pid in pids[2:]:
            answer_naming(pid, obj["id"], "Direct Costs")
        crit = next(
            e for e in client.get("/api/soo").json()["elements"]
            if e["kind"] == "criterion"
        )
        for pid in pids[:2]:
            answer_naming(pid, crit["id"], "Annual spend")
        r = client.post("/api/admin/milestone")
        assert r.status_code == 201
        milestones = client.get("/api/soo/milestones").json()["milestones"]
        assert len(milestones) == 1
        indicator = next(
            e for e in client.get("/api/soo").json()["elements"]
            if e["kind"] == "indicator"
        )
        r = client.post(
            "/api/assess",
            json={
                "alternatives": [
                    {"name": "Plan A", "indicatorValues": {indicator["id"]: 10.0}},
                    {"name": "Plan B", "indicatorValues": {indicator["id"]: 5.0}},
                ]
            },
        )
        assert r.status_code == 200
        ranking = r.json()["ranking"]
        assert ranking[0]["name"] == "Plan A"
        assert ranking[0]["score"] == pytest.approx(1.0)
        assert ranking[1]["score"] == pytest.approx(0.0)
