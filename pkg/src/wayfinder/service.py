"""HTTP facade for the behavioral tasks: explanation authoring, helpfulness
rating, and fog-of-war navigation, plus operator export.

Sessions persist as per-session append-only JSONL event logs (fsynced per
event); the in-memory index is rebuilt from the logs at startup, so the logs
are the source of truth. In Navigate mode the client only ever receives the
current observation window, never the full map."""
from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .analysis import CorpusEntry, load_corpus
from .gridworld import Action, GridMap, Position, default_budget, observe, serialize_map, step
from .reports import load_maps_dir

ADMIN_TOKEN_ENV = "WAYFINDER_ADMIN_TOKEN"
SESSION_IDLE_SECONDS = 30 * 60
MAX_EXPLANATION_CHARS = 2000

NAVIGATE_INSTRUCTION = "Find the treasure in as few steps as possible"
EXPLAIN_INSTRUCTION = (
    "Please send a message to your partner that will help them find the treasure. "
    "Remember that your partner can only see the highlighted area -- they cannot "
    "see the whole map."
)
RATE_INSTRUCTION = (
    "Please evaluate the following messages by rating how helpful they are for "
    "finding the treasure"
)

MODES = ("Explain", "Rate", "Navigate")
QUALITY_CYCLE = ("Good", "Medium", "Bad")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


class EventStore:
    """One append-only JSONL file per session; every append is fsynced.
    Readers tolerate a torn final line (crash mid-write)."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def append(self, session_id: str, record: dict) -> None:
        line = json.dumps(record, sort_keys=True) + "\n"
        with self._lock:
            with open(self.path(session_id), "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())

    def read(self, session_id: str) -> list[dict]:
        p = self.path(session_id)
        if not p.exists():
            return []
        records: list[dict] = []
        for line in p.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                break  # torn tail record from a crash: stop at the valid prefix
        return records

    def session_ids(self) -> list[str]:
        return sorted(f.stem for f in self.root.glob("*.jsonl"))


@dataclass
class Session:
    id: str
    mode: str
    map_id: str
    explanation_id: str | None = None
    explanation_text: str | None = None
    condition: str | None = None
    participant: str | None = None
    position: Position | None = None
    steps: int = 0
    budget: int = 0
    fov_radius: int = 2
    seq: int = 0
    done: bool = False
    closed: bool = False
    completed: bool = False
    path_length: int | None = None
    rating: float | None = None
    stored_text: str | None = None
    created_at: float = 0.0
    last_touch: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    idempotency: dict[str, dict] = field(default_factory=dict, repr=False)


def _window_payload(world: GridMap, pos: Position, radius: int, steps: int) -> dict:
    obs = observe(world, pos, radius, steps_taken=steps)
    return {
        "center": {"row": pos.row, "col": pos.col},
        "radius": radius,
        "window": list(obs.window),
        "steps": steps,
    }


class ServiceState:
    def __init__(
        self,
        maps: dict[str, GridMap],
        corpus: list[CorpusEntry],
        store: EventStore,
        fov_radius: int = 2,
        budget: int | None = None,
        clock: Callable[[], float] = time.time,
        idle_seconds: float = SESSION_IDLE_SECONDS,
    ):
        self.maps = maps
        self.corpus = corpus
        self.store = store
        self.fov_radius = fov_radius
        self.budget = budget
        self.clock = clock
        self.idle_seconds = idle_seconds
        self.sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self._participant_counts: dict[str, int] = {}
        self._rebuild_from_store()

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------

    def _rebuild_from_store(self) -> None:
        for sid in self.store.session_ids():
            records = self.store.read(sid)
            if not records or records[0].get("kind") != "meta":
                continue
            meta = records[0]
            s = Session(
                id=sid,
                mode=meta["mode"],
                map_id=meta["map_id"],
                explanation_id=meta.get("explanation_id"),
                explanation_text=meta.get("explanation_text"),
                condition=meta.get("condition"),
                participant=meta.get("participant"),
                budget=meta.get("budget", 0),
                fov_radius=meta.get("fov_radius", self.fov_radius),
                created_at=meta.get("at", 0.0),
                last_touch=meta.get("at", 0.0),
            )
            if s.map_id in self.maps:
                s.position = self.maps[s.map_id].start
            for rec in records[1:]:
                self._apply_event(s, rec)
            self.sessions[s.id] = s

    def _apply_event(self, s: Session, rec: dict) -> None:
        kind = rec.get("event")
        payload = rec.get("payload", {})
        s.seq = max(s.seq, rec.get("seq", -1) + 1)
        s.last_touch = rec.get("at", s.last_touch)
        if kind == "Acted":
            s.position = Position(payload["position"]["row"], payload["position"]["col"])
            s.steps = payload["steps"]
        elif kind == "Completed":
            s.completed = True
            s.path_length = payload.get("path_length")
            s.done = s.closed = True
        elif kind == "Expired":
            if payload.get("reason") == "budget":
                s.path_length = payload.get("path_length")
            s.done = s.closed = True
        elif kind == "Rated":
            s.rating = payload.get("score")
            s.closed = True
        elif kind == "Explained":
            s.stored_text = payload.get("text")
            s.closed = True

    def _append_event(self, s: Session, event: str, payload: dict) -> None:
        rec = {"kind": "event", "seq": s.seq, "event": event, "payload": payload, "at": self.clock()}
        self.store.append(s.id, rec)
        s.seq += 1
        s.last_touch = rec["at"]

    # ------------------------------------------------------------------
    # session lifecycle
    # ------------------------------------------------------------------

    def _expire_if_idle(self, s: Session) -> None:
        if not s.closed and self.clock() - s.last_touch > self.idle_seconds:
            self._append_event(s, "Expired", {"reason": "idle"})
            s.done = s.closed = True

    def get_session(self, session_id: str) -> Session:
        s = self.sessions.get(session_id)
        if s is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return s

    def _pick_explanation(self, map_id: str, condition: str) -> CorpusEntry:
        candidates = sorted(
            (e for e in self.corpus if e.explanation.map_id == map_id and e.condition == condition),
            key=lambda e: e.explanation.id,
        )
        if not candidates:
            raise ApiError(404, "no_explanation", f"no {condition!r} explanation for map {map_id!r}")
        return candidates[0]

    def _find_explanation(self, explanation_id: str) -> CorpusEntry:
        for e in self.corpus:
            if e.explanation.id == explanation_id:
                return e
        raise ApiError(404, "unknown_explanation", f"no explanation {explanation_id!r}")

    def create_session(
        self,
        mode: str,
        map_id: str,
        explanation_id: str | None = None,
        quality_condition: str | None = None,
        participant: str | None = None,
    ) -> tuple[Session, dict]:
        if mode not in MODES:
            raise ApiError(409, "bad_mode", f"mode must be one of {MODES}")
        world = self.maps.get(map_id)
        if world is None:
            raise ApiError(404, "unknown_map", f"no map {map_id!r}")

        entry: CorpusEntry | None = None
        condition = None
        if explanation_id is not None:
            entry = self._find_explanation(explanation_id)
            condition = entry.condition
        elif quality_condition is not None:
            if quality_condition not in QUALITY_CYCLE:
                raise ApiError(409, "bad_condition", f"condition must be one of {QUALITY_CYCLE}")
            entry = self._pick_explanation(map_id, quality_condition)
            condition = quality_condition
        elif mode == "Navigate" and participant:
            # counterbalanced lists: cycle conditions per participant token
            with self._registry_lock:
                count = self._participant_counts.get(participant, 0)
                self._participant_counts[participant] = count + 1
            wanted = QUALITY_CYCLE[count % len(QUALITY_CYCLE)]
            if any(e.condition == wanted and e.explanation.map_id == map_id for e in self.corpus):
                entry = self._pick_explanation(map_id, wanted)
                condition = wanted
        if mode == "Rate" and entry is None:
            raise ApiError(409, "missing_explanation", "Rate sessions need an explanation_id")

        now = self.clock()
        s = Session(
            id=secrets.token_hex(16),
            mode=mode,
            map_id=map_id,
            explanation_id=entry.explanation.id if entry else None,
            explanation_text=entry.explanation.text if entry else None,
            condition=condition,
            participant=participant,
            position=world.start,
            budget=self.budget if self.budget is not None else default_budget(world),
            fov_radius=self.fov_radius,
            created_at=now,
            last_touch=now,
        )
        meta = {
            "kind": "meta",
            "mode": mode,
            "map_id": map_id,
            "explanation_id": s.explanation_id,
            "explanation_text": s.explanation_text,
            "condition": condition,
            "participant": participant,
            "budget": s.budget,
            "fov_radius": s.fov_radius,
            "at": now,
        }
        self.store.append(s.id, meta)
        with self._registry_lock:
            self.sessions[s.id] = s

        payload: dict
        if mode == "Navigate":
            window = _window_payload(world, s.position, s.fov_radius, 0)
            self._append_event(s, "Observed", window)
            payload = {
                "mode": mode,
                "map_id": map_id,
                "instruction": NAVIGATE_INSTRUCTION,
                "budget": s.budget,
                "fov_radius": s.fov_radius,
                "done": False,
                **window,
            }
            if s.explanation_text is not None:
                payload["explanation_text"] = s.explanation_text
        elif mode == "Explain":
            payload = {
                "mode": mode,
                "map_id": map_id,
                "instruction": EXPLAIN_INSTRUCTION,
                "layout": serialize_map(world).rstrip("\n").split("\n"),
                "start": {"row": world.start.row, "col": world.start.col},
                "fov_radius": s.fov_radius,
                "max_chars": MAX_EXPLANATION_CHARS,
            }
        else:  # Rate
            payload = {
                "mode": mode,
                "map_id": map_id,
                "instruction": RATE_INSTRUCTION,
                "layout": serialize_map(world).rstrip("\n").split("\n"),
                "explanation_text": s.explanation_text,
                "scale": {"min": 0, "max": 100},
            }
        return s, payload

    # ------------------------------------------------------------------
    # participant actions
    # ------------------------------------------------------------------

    def post_action(self, session_id: str, token: str) -> dict:
        s = self.get_session(session_id)
        with s.lock:
            self._expire_if_idle(s)
            if s.mode != "Navigate":
                raise ApiError(409, "wrong_mode", "actions only apply to Navigate sessions")
            if s.done or s.closed:
                raise ApiError(409, "finished", "session is finished")
            try:
                action = Action.from_token(token)
            except ValueError:
                raise ApiError(422, "bad_action", f"unknown action token {token!r}") from None

            world = self.maps[s.map_id]
            assert s.position is not None
            new_pos = step(world, s.position, action)
            blocked = new_pos == s.position
            s.position = new_pos
            s.steps += 1
            self._append_event(
                s,
                "Acted",
                {
                    "action": action.name,
                    "blocked": blocked,
                    "position": {"row": new_pos.row, "col": new_pos.col},
                    "steps": s.steps,
                },
            )
            window = _window_payload(world, s.position, s.fov_radius, s.steps)
            self._append_event(s, "Observed", window)

            done = False
            if s.position == world.goal:
                s.completed = True
                s.path_length = s.steps
                self._append_event(s, "Completed", {"path_length": s.steps})
                done = True
            elif s.steps >= s.budget:
                s.path_length = s.steps
                self._append_event(s, "Expired", {"reason": "budget", "path_length": s.steps})
                done = True
            if done:
                s.done = s.closed = True
            return {**window, "blocked": blocked, "done": done, "path_length": s.path_length}

    def post_rating(self, session_id: str, score: float) -> dict:
        s = self.get_session(session_id)
        with s.lock:
            self._expire_if_idle(s)
            if s.mode != "Rate":
                raise ApiError(409, "wrong_mode", "ratings only apply to Rate sessions")
            if s.closed or s.rating is not None:
                raise ApiError(409, "already_rated", "session already rated")
            if not isinstance(score, (int, float)) or not (0 <= float(score) <= 100):
                raise ApiError(422, "bad_score", "score must be in [0, 100]")
            s.rating = float(score)
            self._append_event(s, "Rated", {"score": s.rating})
            s.closed = True
            return {"ok": True, "score": s.rating}

    def post_explanation(self, session_id: str, text: str) -> dict:
        s = self.get_session(session_id)
        with s.lock:
            self._expire_if_idle(s)
            if s.mode != "Explain":
                raise ApiError(409, "wrong_mode", "explanations only apply to Explain sessions")
            if s.closed:
                raise ApiError(409, "finished", "session is finished")
            if len(text) > MAX_EXPLANATION_CHARS:
                raise ApiError(413, "too_long", f"text exceeds {MAX_EXPLANATION_CHARS} characters")
            normalized = " ".join(text.split())
            if not normalized:
                raise ApiError(422, "empty_text", "explanation text is empty")
            s.stored_text = normalized
            self._append_event(s, "Explained", {"text": normalized})
            s.closed = True
            return {"ok": True, "stored_text": normalized}

    def session_view(self, session_id: str) -> dict:
        """Participant-safe resume payload: everything the session has already
        revealed (union of served windows), never anything more. Lets a client
        that lost local state reproduce its view from the server log."""
        s = self.get_session(session_id)
        with s.lock:
            self._expire_if_idle(s)
            records = self.store.read(s.id)
            view: dict = {
                "mode": s.mode,
                "map_id": s.map_id,
                "done": s.done,
                "closed": s.closed,
            }
            if s.mode == "Navigate":
                revealed: dict[tuple[int, int], str] = {}
                last_window: dict | None = None
                for rec in records:
                    if rec.get("kind") != "event" or rec.get("event") != "Observed":
                        continue
                    payload = rec["payload"]
                    last_window = payload
                    center = payload["center"]
                    radius = payload["radius"]
                    for wr, row in enumerate(payload["window"]):
                        for wc, ch in enumerate(row):
                            if ch == "?":
                                continue
                            cell = (center["row"] - radius + wr, center["col"] - radius + wc)
                            if ch == "G" or cell not in revealed:
                                revealed[cell] = ch
                view.update(
                    {
                        "instruction": NAVIGATE_INSTRUCTION,
                        "budget": s.budget,
                        "fov_radius": s.fov_radius,
                        "steps": s.steps,
                        "path_length": s.path_length,
                        "revealed": [
                            {"row": r, "col": c, "ch": ch}
                            for (r, c), ch in sorted(revealed.items())
                        ],
                    }
                )
                if last_window is not None:
                    view["center"] = last_window["center"]
                    view["radius"] = last_window["radius"]
                if s.explanation_text is not None:
                    view["explanation_text"] = s.explanation_text
            elif s.mode == "Rate":
                world = self.maps[s.map_id]
                view.update(
                    {
                        "instruction": RATE_INSTRUCTION,
                        "rating": s.rating,
                        "explanation_text": s.explanation_text,
                        "scale": {"min": 0, "max": 100},
                        "layout": serialize_map(world).rstrip("\n").split("\n"),
                    }
                )
            else:
                world = self.maps[s.map_id]
                view.update(
                    {
                        "instruction": EXPLAIN_INSTRUCTION,
                        "stored_text": s.stored_text,
                        "max_chars": MAX_EXPLANATION_CHARS,
                        "layout": serialize_map(world).rstrip("\n").split("\n"),
                        "start": {"row": world.start.row, "col": world.start.col},
                        "fov_radius": s.fov_radius,
                    }
                )
            return view

    # ------------------------------------------------------------------
    # export
    # ------------------------------------------------------------------

    def export_records(self, mode: str | None = None) -> list[dict]:
        out: list[dict] = []
        for sid in sorted(self.sessions):
            s = self.sessions[sid]
            if mode and s.mode != mode:
                continue
            if s.mode == "Explain" and s.stored_text:
                out.append({"id": f"explain-{s.id[:8]}", "map_id": s.map_id, "text": s.stored_text})
            elif s.mode == "Rate" and s.rating is not None:
                out.append(
                    {
                        "id": f"rate-{s.id[:8]}",
                        "map_id": s.map_id,
                        "text": s.explanation_text or "",
                        "rating": s.rating,
                    }
                )
            elif s.mode == "Navigate" and s.path_length is not None:
                out.append(
                    {
                        "id": f"nav-{s.id[:8]}",
                        "map_id": s.map_id,
                        "text": s.explanation_text or "",
                        "condition": s.condition or "None",
                        "path_length": s.path_length,
                    }
                )
        return out


def create_app(
    maps_dir: str | Path,
    corpus_path: str | Path | None = None,
    store_dir: str | Path = "sessions",
    ui_dir: str | Path | None = None,
    fov_radius: int = 2,
    budget: int | None = None,
    clock: Callable[[], float] = time.time,
    idle_seconds: float = SESSION_IDLE_SECONDS,
    admin_token: str | None = None,
) -> FastAPI:
    maps = load_maps_dir(maps_dir)
    corpus = load_corpus(corpus_path) if corpus_path else []
    state = ServiceState(
        maps,
        corpus,
        EventStore(store_dir),
        fov_radius=fov_radius,
        budget=budget,
        clock=clock,
        idle_seconds=idle_seconds,
    )

    app = FastAPI(title="wayfinder service", version="0.1.0")
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    def _payload_or_422(data: dict, key: str):
        if key not in data:
            raise ApiError(422, "missing_field", f"missing field {key!r}")
        return data[key]

    async def _json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise ApiError(422, "bad_json", "request body must be JSON") from None
        if not isinstance(body, dict):
            raise ApiError(422, "bad_json", "request body must be a JSON object")
        return body

    def _idempotent(s: Session, request: Request, compute: Callable[[], dict]) -> dict:
        key = request.headers.get("Idempotency-Key")
        if key:
            cached = s.idempotency.get(key)
            if cached is not None:
                return cached
        result = compute()
        if key:
            s.idempotency[key] = result
        return result

    @app.get("/api/maps")
    async def list_maps():
        return [
            {"id": m.id, "width": m.width, "height": m.height, "pair_id": m.pair_id}
            for m in sorted(maps.values(), key=lambda m: m.id)
        ]

    @app.post("/api/sessions")
    async def create_session(request: Request):
        body = await _json_body(request)
        mode = _payload_or_422(body, "mode")
        map_id = _payload_or_422(body, "map_id")
        session, payload = state.create_session(
            mode=mode,
            map_id=map_id,
            explanation_id=body.get("explanation_id"),
            quality_condition=body.get("quality_condition"),
            participant=body.get("participant"),
        )
        return {"session_id": session.id, "payload": payload}

    @app.post("/api/sessions/{session_id}/actions")
    async def post_action(session_id: str, request: Request):
        body = await _json_body(request)
        token = _payload_or_422(body, "action")
        s = state.get_session(session_id)
        return _idempotent(s, request, lambda: state.post_action(session_id, token))

    @app.post("/api/sessions/{session_id}/rating")
    async def post_rating(session_id: str, request: Request):
        body = await _json_body(request)
        score = _payload_or_422(body, "score")
        s = state.get_session(session_id)
        return _idempotent(s, request, lambda: state.post_rating(session_id, score))

    @app.post("/api/sessions/{session_id}/explanation")
    async def post_explanation(session_id: str, request: Request):
        body = await _json_body(request)
        text = _payload_or_422(body, "text")
        s = state.get_session(session_id)
        return _idempotent(s, request, lambda: state.post_explanation(session_id, text))

    @app.get("/api/sessions/{session_id}/view")
    async def get_session_view(session_id: str):
        return state.session_view(session_id)

    @app.get("/api/sessions/{session_id}")
    async def get_session_log(session_id: str, request: Request):
        expected = admin_token or os.environ.get(ADMIN_TOKEN_ENV)
        provided = request.headers.get("X-Admin-Token")
        if not expected or provided != expected:
            raise ApiError(403, "forbidden", "operator token required")
        state.get_session(session_id)  # 404 when unknown
        return {"session_id": session_id, "records": state.store.read(session_id)}

    @app.get("/api/export")
    async def export(mode: str | None = None):
        records = state.export_records(mode=mode)
        body = "\n".join(json.dumps(r, sort_keys=True) for r in records)
        return PlainTextResponse(
            content=body + ("\n" if body else ""), media_type="application/x-ndjson"
        )

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "maps": len(maps)}

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/")
        async def root():
            return Response(
                content="wayfinder service: no UI bundle configured", media_type="text/plain"
            )

    return app
