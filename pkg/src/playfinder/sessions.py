"""Per-session conversation state behind a pluggable key-value store.

A session records its turns (append-only), name-to-id bindings confirmed
through clarification, and at most one pending clarification. The store
enforces one writer per session; distinct sessions never contend.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Protocol

from .errors import BindingError, NoPendingClarificationError

DEFAULT_TTL_SECONDS = 24 * 3600.0


@dataclass(frozen=True)
class Turn:
    prompt: str
    rewritten_prompt: str
    response_kind: str  # ANSWER | CLARIFY | REJECT | FAIL
    request_digest: str | None
    timestamp: float

    def to_json(self) -> dict:
        return {
            "prompt": self.prompt,
            "rewritten_prompt": self.rewritten_prompt,
            "response_kind": self.response_kind,
            "request_digest": self.request_digest,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Turn":
        return cls(prompt=doc["prompt"], rewritten_prompt=doc["rewritten_prompt"],
                   response_kind=doc["response_kind"],
                   request_digest=doc.get("request_digest"),
                   timestamp=doc["timestamp"])


@dataclass(frozen=True)
class PendingClarification:
    mention: str
    offered_ids: tuple[int, ...]
    question: str
    # everything needed to resume the suspended turn without re-parsing
    resume: dict

    def to_json(self) -> dict:
        return {"mention": self.mention, "offered_ids": list(self.offered_ids),
                "question": self.question, "resume": self.resume}

    @classmethod
    def from_json(cls, doc: dict) -> "PendingClarification":
        return cls(mention=doc["mention"], offered_ids=tuple(doc["offered_ids"]),
                   question=doc["question"], resume=doc["resume"])


@dataclass(frozen=True)
class Session:
    session_id: str
    turns: tuple[Turn, ...] = ()
    bindings: dict[str, int] = field(default_factory=dict)  # casefolded mention -> nfl_id
    pending_clarification: PendingClarification | None = None
    last_active: float = 0.0

    def last_answer_turn(self) -> Turn | None:
        for turn in reversed(self.turns):
            if turn.response_kind == "ANSWER":
                return turn
        return None

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "turns": [t.to_json() for t in self.turns],
            "bindings": dict(self.bindings),
            "pending_clarification": (self.pending_clarification.to_json()
                                      if self.pending_clarification else None),
            "last_active": self.last_active,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Session":
        pending = doc.get("pending_clarification")
        return cls(
            session_id=doc["session_id"],
            turns=tuple(Turn.from_json(t) for t in doc["turns"]),
            bindings={k: int(v) for k, v in doc["bindings"].items()},
            pending_clarification=PendingClarification.from_json(pending) if pending else None,
            last_active=doc["last_active"],
        )


class KeyValueStore(Protocol):
    """Minimal persistence contract; implementations must give atomic put."""

    def get(self, key: str) -> str | None: ...
    def put(self, key: str, value: str) -> None: ...
    def delete(self, key: str) -> None: ...
    def scan(self) -> Iterator[str]: ...


class InMemoryKV:
    def __init__(self) -> None:
        self._data: dict[str, str] = {}
        self._lock = threading.Lock()

    def get(self, key: str) -> str | None:
        with self._lock:
            return self._data.get(key)

    def put(self, key: str, value: str) -> None:
        with self._lock:
            self._data[key] = value

    def delete(self, key: str) -> None:
        with self._lock:
            self._data.pop(key, None)

    def scan(self) -> Iterator[str]:
        with self._lock:
            return iter(list(self._data))


class SessionStore:
    def __init__(self, kv: KeyValueStore | None = None,
                 clock: Callable[[], float] = time.time):
        self._kv = kv or InMemoryKV()
        self._clock = clock
        self._locks: dict[str, threading.RLock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, session_id: str) -> threading.RLock:
        """One writer per session; re-entrant so resume paths can nest."""
        with self._locks_guard:
            if session_id not in self._locks:
                self._locks[session_id] = threading.RLock()
            return self._locks[session_id]

    def _load(self, session_id: str) -> Session | None:
        raw = self._kv.get(session_id)
        return Session.from_json(json.loads(raw)) if raw is not None else None

    def _save(self, session: Session) -> Session:
        self._kv.put(session.session_id, json.dumps(session.to_json()))
        return session

    def get(self, session_id: str) -> Session | None:
        return self._load(session_id)

    def get_or_create(self, session_id: str) -> Session:
        with self.lock(session_id):
            existing = self._load(session_id)
            if existing is not None:
                return existing
            return self._save(Session(session_id=session_id, last_active=self._clock()))

    def append_turn(self, session: Session, turn: Turn) -> Session:
        with self.lock(session.session_id):
            current = self._load(session.session_id) or session
            updated = replace(current, turns=current.turns + (turn,),
                              last_active=self._clock())
            return self._save(updated)

    def set_pending(self, session: Session, pending: PendingClarification) -> Session:
        with self.lock(session.session_id):
            current = self._load(session.session_id) or session
            updated = replace(current, pending_clarification=pending,
                              last_active=self._clock())
            return self._save(updated)

    def clear_pending(self, session: Session) -> Session:
        with self.lock(session.session_id):
            current = self._load(session.session_id) or session
            updated = replace(current, pending_clarification=None,
                              last_active=self._clock())
            return self._save(updated)

    def confirm_binding(self, session: Session, mention: str, nfl_id: int) -> Session:
        with self.lock(session.session_id):
            current = self._load(session.session_id) or session
            pending = current.pending_clarification
            if pending is None or pending.mention.casefold() != mention.casefold():
                raise NoPendingClarificationError(
                    f"session {session.session_id!r} has no pending clarification "
                    f"for {mention!r}")
            if nfl_id not in pending.offered_ids:
                raise BindingError(f"{nfl_id} is not an offered candidate")
            bindings = dict(current.bindings)
            bindings[mention.casefold()] = nfl_id
            updated = replace(current, bindings=bindings,
                              last_active=self._clock())
            return self._save(updated)

    def expire(self, now: float | None = None,
               ttl: float = DEFAULT_TTL_SECONDS) -> int:
        """Drop sessions idle strictly longer than ttl. Returns eviction count."""
        now = self._clock() if now is None else now
        evicted = 0
        for session_id in self._kv.scan():
            with self.lock(session_id):
                session = self._load(session_id)
                if session is not None and (now - session.last_active) > ttl:
                    self._kv.delete(session_id)
                    evicted += 1
        return evicted
