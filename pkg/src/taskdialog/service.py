"""HTTP serving: one dialogue turn per request, with in-memory sessions
carrying the belief state and last agent response between turns.

Endpoints (JSON over HTTP):
    POST /v1/turn           {session_id, user_utterance} -> turn payload
    POST /v1/session/reset  {session_id?} -> {session_id}
    GET  /v1/health
    GET  /v1/schema
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import kb as kbmod
from .corpus import BeliefState, tokenize
from .model import DialogueNetwork
from .numcore import no_grad

DEFAULT_SESSION_TTL = 30 * 60.0
MAX_RECORDS_SHOWN = 5


@dataclass
class Session:
    session_id: str
    belief: BeliefState = field(default_factory=BeliefState.empty)
    last_agent_response: tuple[str, ...] = ()
    transcript: list[tuple[str, str]] = field(default_factory=list)
    last_access: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class SessionStore:
    def __init__(self, ttl: float = DEFAULT_SESSION_TTL):
        self.ttl = ttl
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _evict(self, now: float):
        dead = [sid for sid, s in self._sessions.items()
                if now - s.last_access > self.ttl]
        for sid in dead:
            del self._sessions[sid]

    def get_or_create(self, session_id: str) -> Session:
        now = time.monotonic()
        with self._lock:
            self._evict(now)
            session = self._sessions.get(session_id)
            if session is None:
                session = Session(session_id=session_id)
                self._sessions[session_id] = session
            session.last_access = now
            return session

    def drop(self, session_id: str):
        with self._lock:
            self._sessions.pop(session_id, None)

    def __len__(self):
        with self._lock:
            return len(self._sessions)


class TurnRequest(BaseModel):
    session_id: str
    user_utterance: str


class ResetRequest(BaseModel):
    session_id: str | None = None


def create_app(net: DialogueNetwork, table: kbmod.KBTable | None,
               session_ttl: float = DEFAULT_SESSION_TTL,
               checkpoint_name: str | None = None) -> FastAPI:
    app = FastAPI(title="taskdialog", docs_url=None, redoc_url=None)
    store = SessionStore(ttl=session_ttl)
    app.state.sessions = store

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "sessions": len(store),
                "checkpoint": checkpoint_name}

    @app.get("/v1/schema")
    def schema():
        return net.schema.to_json()

    @app.post("/v1/session/reset")
    def reset(request: ResetRequest):
        if request.session_id:
            store.drop(request.session_id)
        return {"session_id": uuid.uuid4().hex}

    @app.post("/v1/turn")
    def turn(request: TurnRequest):
        text = request.user_utterance.strip()
        if not text:
            raise HTTPException(status_code=400, detail="empty user_utterance")
        session = store.get_or_create(request.session_id)
        with session.lock:
            try:
                with no_grad():
                    pred = net.predict_turn(session.last_agent_response,
                                            session.belief,
                                            tuple(tokenize(text)), table)
                response_text = kbmod.lexicalize(pred.response_tokens,
                                                 pred.kb_results, pred.belief,
                                                 net.schema)
            except Exception as err:  # session state stays untouched
                raise HTTPException(status_code=500,
                                    detail=f"model failure: {err}") from err
            session.belief = pred.belief
            session.last_agent_response = pred.response_tokens
            session.transcript.append(("user", text))
            session.transcript.append(("agent", response_text))
            return {
                "session_id": session.session_id,
                "belief": pred.belief.to_json(net.schema),
                "match_bin": pred.match.bin_index,
                "response_text": response_text,
                "delex_response": " ".join(pred.response_tokens),
                "response_slots": sorted(pred.response_slots),
                "kb_records_shown": pred.kb_results[:MAX_RECORDS_SHOWN],
            }

    return app
