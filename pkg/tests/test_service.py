import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from wayfinder.gridworld import Position
from wayfinder.service import (
    EXPLAIN_INSTRUCTION,
    NAVIGATE_INSTRUCTION,
    RATE_INSTRUCTION,
    EventStore,
    create_app,
)

from conftest import MAPS_DIR

OPTIMAL_CORRIDOR = ["right", "right", "down", "down", "left", "left"]


@pytest.fixture()
def corpus_file(tmp_path) -> Path:
    p = tmp_path / "corpus.jsonl"
    p.write_text(
        "\n".join(
            [
                json.dumps({"id": "g1", "map_id": "corridor5", "text": "go right twice then down twice then left twice", "condition": "Good"}),
                json.dumps({"id": "m1", "map_id": "corridor5", "text": "head to the bottom left", "condition": "Medium"}),
                json.dumps({"id": "b1", "map_id": "corridor5", "text": "good luck", "condition": "Bad"}),
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    return p


class FakeClock:
    def __init__(self):
        self.now = 1000.0

    def __call__(self):
        return self.now


@pytest.fixture()
def clock():
    return FakeClock()


@pytest.fixture()
def client(tmp_path, corpus_file, clock):
    app = create_app(
        MAPS_DIR,
        corpus_path=corpus_file,
        store_dir=tmp_path / "store",
        clock=clock,
        admin_token="tok",
    )
    return TestClient(app)


def _create(client, mode="Navigate", map_id="corridor5", **kw):
    r = client.post("/api/sessions", json={"mode": mode, "map_id": map_id, **kw})
    assert r.status_code == 200, r.text
    return r.json()["session_id"], r.json()["payload"]


class TestCreateSession:
    def test_navigate_payload_is_fogged(self, client):
        _, payload = _create(client)
        assert payload["instruction"] == NAVIGATE_INSTRUCTION
        assert payload["center"] == {"row": 1, "col": 1}
        assert len(payload["window"]) == 5
        assert "layout" not in payload
        assert payload["steps"] == 0

    def test_explain_payload_full_map(self, client):
        _, payload = _create(client, mode="Explain")
        assert payload["instruction"] == EXPLAIN_INSTRUCTION
        assert any("S" in row for row in payload["layout"])
        assert payload["fov_radius"] == 2

    def test_rate_payload(self, client):
        _, payload = _create(client, mode="Rate", explanation_id="g1")
        assert payload["instruction"] == RATE_INSTRUCTION
        assert payload["scale"] == {"min": 0, "max": 100}
        assert payload["explanation_text"].startswith("go right")

    def test_unknown_map_404(self, client):
        r = client.post("/api/sessions", json={"mode": "Navigate", "map_id": "nope"})
        assert r.status_code == 404
        assert r.json()["code"] == "unknown_map"

    def test_rate_requires_explanation(self, client):
        r = client.post("/api/sessions", json={"mode": "Rate", "map_id": "corridor5"})
        assert r.status_code == 409

    def test_navigate_with_condition(self, client):
        _, payload = _create(client, quality_condition="Good")
        assert payload["explanation_text"].startswith("go right")

    def test_session_ids_unguessable(self, client):
        sid1, _ = _create(client)
        sid2, _ = _create(client)
        assert sid1 != sid2
        assert len(sid1) == 32  # 128-bit hex


class TestNavigate:
    def test_optimal_run(self, client):
        sid, _ = _create(client)
        for i, a in enumerate(OPTIMAL_CORRIDOR):
            r = client.post(f"/api/sessions/{sid}/actions", json={"action": a})
            assert r.status_code == 200
            body = r.json()
        assert body["done"] is True
        assert body["path_length"] == 6

    def test_blocked_move_costs_step(self, client):
        sid, _ = _create(client)
        r = client.post(f"/api/sessions/{sid}/actions", json={"action": "up"})
        body = r.json()
        assert body["blocked"] is True
        assert body["steps"] == 1
        assert body["center"] == {"row": 1, "col": 1}

    def test_unknown_action_422(self, client):
        sid, _ = _create(client)
        r = client.post(f"/api/sessions/{sid}/actions", json={"action": "jump"})
        assert r.status_code == 422

    def test_finished_session_409(self, client):
        sid, _ = _create(client)
        for a in OPTIMAL_CORRIDOR:
            client.post(f"/api/sessions/{sid}/actions", json={"action": a})
        r = client.post(f"/api/sessions/{sid}/actions", json={"action": "up"})
        assert r.status_code == 409

    def test_budget_expiry(self, tmp_path, corpus_file, clock):
        app = create_app(MAPS_DIR, corpus_path=corpus_file, store_dir=tmp_path / "s2", clock=clock, budget=3)
        c = TestClient(app)
        sid, payload = _create(c)
        assert payload["budget"] == 3
        for _ in range(3):
            r = c.post(f"/api/sessions/{sid}/actions", json={"action": "up"})
        assert r.json()["done"] is True
        assert r.json()["path_length"] == 3

    def test_fog_integrity_never_leaks(self, client):
        """No payload may contain cell states outside the union of windows."""
        from wayfinder.gridworld import observe, parse_map

        grid = parse_map((MAPS_DIR / "corridor5.map").read_text())
        sid, payload = _create(client)
        revealed: set[tuple[int, int]] = set()

        def check_window(payload):
            center = Position(payload["center"]["row"], payload["center"]["col"])
            radius = payload["radius"]
            expected = observe(grid, center, radius)
            assert tuple(payload["window"]) == expected.window  # exactly the engine's view
            for r, row in enumerate(payload["window"]):
                for c, ch in enumerate(row):
                    if ch != "?":
                        revealed.add((center.row - radius + r, center.col - radius + c))

        check_window(payload)
        for a in OPTIMAL_CORRIDOR:
            body = client.post(f"/api/sessions/{sid}/actions", json={"action": a}).json()
            assert set(body.keys()) <= {"center", "radius", "window", "steps", "blocked", "done", "path_length"}
            check_window(body)

    def test_parity_with_engine_replay(self, client):
        """Replaying the session's actions through the engine yields identical
        positions and path length."""
        from wayfinder.gridworld import Action, parse_map, step

        grid = parse_map((MAPS_DIR / "corridor5.map").read_text())
        sid, _ = _create(client)
        actions = ["up", "right", "right", "up", "down", "down", "left", "left"]
        service_centers = []
        final = None
        for a in actions:
            body = client.post(f"/api/sessions/{sid}/actions", json={"action": a}).json()
            service_centers.append((body["center"]["row"], body["center"]["col"]))
            final = body
        pos = grid.start
        engine_centers = []
        for a in actions:
            pos = step(grid, pos, Action.from_token(a))
            engine_centers.append((pos.row, pos.col))
        assert service_centers == engine_centers
        assert final["done"] is True and final["path_length"] == len(actions)


class TestRateExplain:
    def test_rating_bounds(self, client):
        for score, expected in ((0, 200), (100, 200), (101, 422), (-1, 422)):
            sid, _ = _create(client, mode="Rate", explanation_id="g1")
            r = client.post(f"/api/sessions/{sid}/rating", json={"score": score})
            assert r.status_code == expected, (score, r.text)

    def test_double_rating_409(self, client):
        sid, _ = _create(client, mode="Rate", explanation_id="g1")
        assert client.post(f"/api/sessions/{sid}/rating", json={"score": 50}).status_code == 200
        assert client.post(f"/api/sessions/{sid}/rating", json={"score": 50}).status_code == 409

    def test_explanation_normalized(self, client):
        sid, _ = _create(client, mode="Explain")
        r = client.post(f"/api/sessions/{sid}/explanation", json={"text": "  go   up twice "})
        assert r.json()["stored_text"] == "go up twice"

    def test_empty_text_422(self, client):
        sid, _ = _create(client, mode="Explain")
        assert client.post(f"/api/sessions/{sid}/explanation", json={"text": "   "}).status_code == 422

    def test_oversize_text_413(self, client):
        sid, _ = _create(client, mode="Explain")
        assert client.post(f"/api/sessions/{sid}/explanation", json={"text": "x" * 3000}).status_code == 413

    def test_wrong_mode_409(self, client):
        sid, _ = _create(client, mode="Explain")
        assert client.post(f"/api/sessions/{sid}/rating", json={"score": 10}).status_code == 409


class TestIdempotency:
    def test_duplicate_action_not_reapplied(self, client):
        sid, _ = _create(client)
        h = {"Idempotency-Key": "k1"}
        a = client.post(f"/api/sessions/{sid}/actions", json={"action": "right"}, headers=h).json()
        b = client.post(f"/api/sessions/{sid}/actions", json={"action": "right"}, headers=h).json()
        assert a == b
        assert a["steps"] == 1
        c = client.post(f"/api/sessions/{sid}/actions", json={"action": "right"}, headers={"Idempotency-Key": "k2"}).json()
        assert c["steps"] == 2


class TestExpiry:
    def test_idle_expiry(self, client, clock):
        sid, _ = _create(client)
        clock.now += 31 * 60
        r = client.post(f"/api/sessions/{sid}/actions", json={"action": "right"})
        assert r.status_code == 409


class TestPersistence:
    def test_event_log_contiguous_seq(self, client, tmp_path):
        sid, _ = _create(client)
        for a in OPTIMAL_CORRIDOR:
            client.post(f"/api/sessions/{sid}/actions", json={"action": a})
        r = client.get(f"/api/sessions/{sid}", headers={"X-Admin-Token": "tok"})
        records = r.json()["records"]
        assert records[0]["kind"] == "meta"
        events = [rec for rec in records if rec["kind"] == "event"]
        assert [e["seq"] for e in events] == list(range(len(events)))
        kinds = [e["event"] for e in events]
        assert kinds[0] == "Observed"
        assert kinds[-1] == "Completed"

    def test_admin_token_required(self, client):
        sid, _ = _create(client)
        assert client.get(f"/api/sessions/{sid}").status_code == 403

    def test_rebuild_from_store(self, tmp_path, corpus_file, clock):
        store = tmp_path / "store-rebuild"
        app = create_app(MAPS_DIR, corpus_path=corpus_file, store_dir=store, clock=clock)
        c = TestClient(app)
        sid, _ = _create(c)
        c.post(f"/api/sessions/{sid}/actions", json={"action": "right"})
        # new process: rebuild index purely from the logs
        app2 = create_app(MAPS_DIR, corpus_path=corpus_file, store_dir=store, clock=clock)
        c2 = TestClient(app2)
        body = c2.post(f"/api/sessions/{sid}/actions", json={"action": "right"}).json()
        assert body["steps"] == 2
        assert body["center"] == {"row": 1, "col": 3}

    def test_torn_tail_record_ignored(self, tmp_path):
        store = EventStore(tmp_path / "es")
        store.append("s1", {"kind": "meta", "mode": "Explain", "map_id": "corridor5", "at": 0})
        store.append("s1", {"kind": "event", "seq": 0, "event": "Explained", "payload": {"text": "hi"}, "at": 1})
        with open(store.path("s1"), "a", encoding="utf-8") as fh:
            fh.write('{"kind": "event", "seq": 1, "ev')  # crash mid-write
        records = store.read("s1")
        assert len(records) == 2  # valid prefix only


class TestExportAndCounterbalance:
    def test_full_flow_exports_three_records(self, client, tmp_path):
        sid, _ = _create(client, mode="Explain")
        client.post(f"/api/sessions/{sid}/explanation", json={"text": "go down twice then right"})
        sid, _ = _create(client, mode="Rate", explanation_id="g1")
        client.post(f"/api/sessions/{sid}/rating", json={"score": 77})
        sid, _ = _create(client, quality_condition="Good")
        for a in OPTIMAL_CORRIDOR:
            client.post(f"/api/sessions/{sid}/actions", json={"action": a})
        lines = [json.loads(l) for l in client.get("/api/export").text.splitlines()]
        assert len(lines) == 3
        by_id = {l["id"].split("-")[0]: l for l in lines}
        assert by_id["explain"]["text"] == "go down twice then right"
        assert by_id["rate"]["rating"] == 77.0
        assert by_id["nav"]["path_length"] == 6
        assert by_id["nav"]["condition"] == "Good"

    def test_export_mode_filter(self, client):
        sid, _ = _create(client, mode="Explain")
        client.post(f"/api/sessions/{sid}/explanation", json={"text": "hello there friend"})
        text = client.get("/api/export", params={"mode": "Navigate"}).text
        assert text.strip() == ""

    def test_export_feeds_analyze(self, client, tmp_path):
        from wayfinder.cli import run_command

        sid, _ = _create(client, mode="Explain")
        client.post(f"/api/sessions/{sid}/explanation", json={"text": "go right twice then down"})
        corpus = tmp_path / "exported.jsonl"
        corpus.write_text(client.get("/api/export").text, encoding="utf-8")
        rc = run_command(
            ["analyze", "--corpus", str(corpus), "--maps", str(MAPS_DIR), "--out", str(tmp_path / "out"), "--translator", "keyword", "--attempts", "1"]
        )
        assert rc == 0

    def test_participant_round_robin(self, client):
        conditions = []
        for _ in range(6):
            _, payload = _create(client, participant="p1")
            # condition shows through the explanation text picked per cycle
            conditions.append(payload.get("explanation_text"))
        assert conditions[0] != conditions[1] != conditions[2]
        assert conditions[0:3] == conditions[3:6]


class TestSessionView:
    def test_navigate_view_is_union_of_served_windows(self, client):
        from wayfinder.gridworld import parse_map

        grid = parse_map((MAPS_DIR / "corridor5.map").read_text())
        sid, payload = _create(client)
        moves = ["right", "right", "down"]
        union: dict[tuple[int, int], str] = {}

        def absorb(p):
            center = Position(p["center"]["row"], p["center"]["col"])
            for r, row in enumerate(p["window"]):
                for c, ch in enumerate(row):
                    if ch != "?":
                        cell = (center.row - p["radius"] + r, center.col - p["radius"] + c)
                        if ch == "G" or cell not in union:
                            union[cell] = ch

        absorb(payload)
        for a in moves:
            absorb(client.post(f"/api/sessions/{sid}/actions", json={"action": a}).json())

        view = client.get(f"/api/sessions/{sid}/view").json()
        assert view["mode"] == "Navigate"
        assert view["steps"] == 3
        got = {(c["row"], c["col"]): c["ch"] for c in view["revealed"]}
        assert got == union  # exactly what was served; nothing more, nothing less
        for (r, c), ch in got.items():
            expected = "G" if Position(r, c) == grid.goal else grid.rows[r][c]
            assert ch == expected

    def test_view_unknown_session_404(self, client):
        assert client.get("/api/sessions/doesnotexist/view").status_code == 404

    def test_rate_and_explain_views(self, client):
        sid, _ = _create(client, mode="Rate", explanation_id="g1")
        view = client.get(f"/api/sessions/{sid}/view").json()
        assert view["instruction"] == RATE_INSTRUCTION
        assert view["rating"] is None
        client.post(f"/api/sessions/{sid}/rating", json={"score": 40})
        assert client.get(f"/api/sessions/{sid}/view").json()["rating"] == 40.0

        sid, _ = _create(client, mode="Explain")
        view = client.get(f"/api/sessions/{sid}/view").json()
        assert view["instruction"] == EXPLAIN_INSTRUCTION
        assert any("S" in row for row in view["layout"])
