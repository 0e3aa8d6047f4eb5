"""Semantic cache over entity-redacted query templates.

A cached entry holds the redacted prompt text, its embedding, and the
compiled request with entity IDs replaced by the matching placeholders.
A lookup hit means: the incoming redacted text's nearest neighbor by
cosine clears the threshold and has the same ordered slot kinds, so the
stored request can be re-instantiated with fresh IDs and executed without
another formulation pass.

The embedding is a feature-hashed bag of token bigrams (single-token
texts fall back to the lone unigram): each feature is hashed with
blake2b; the first four digest bytes pick one of D=256 coordinates, the
fifth byte's low bit picks the sign; the counts vector is L2-normalized.
No model weights, so vectors are identical across processes and
platforms. A text whose features cancel to the zero vector gets a single
unit coordinate hashed from the whole text.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CacheError
from .query import CompiledQuery, InClause, SearchRequest, TermClause, canonical_query, query_from_wire, query_to_wire

EMBEDDING_DIM = 256
DEFAULT_THRESHOLD = 0.90
DEFAULT_CAPACITY = 10_000

PLACEHOLDER_FIELDS = {"PLAYER": "nflId", "TEAM": "teamId"}


@dataclass(frozen=True)
class MentionSpan:
    start: int
    end: int
    kind: str  # PLAYER | TEAM
    mention: str


@dataclass(frozen=True)
class Slot:
    placeholder: str
    kind: str
    start: int
    end: int
    mention: str

    def to_json(self) -> dict:
        return {"placeholder": self.placeholder, "kind": self.kind,
                "start": self.start, "end": self.end, "mention": self.mention}

    @classmethod
    def from_json(cls, doc: dict) -> "Slot":
        return cls(placeholder=doc["placeholder"], kind=doc["kind"],
                   start=doc["start"], end=doc["end"], mention=doc["mention"])


@dataclass(frozen=True)
class RedactedQuery:
    text: str
    slots: tuple[Slot, ...]

    @property
    def slot_kinds(self) -> tuple[str, ...]:
        return tuple(s.kind for s in self.slots)

    def to_json(self) -> dict:
        return {"text": self.text, "slots": [s.to_json() for s in self.slots]}

    @classmethod
    def from_json(cls, doc: dict) -> "RedactedQuery":
        return cls(text=doc["text"], slots=tuple(Slot.from_json(s) for s in doc["slots"]))


def redact(prompt: str, spans: Sequence[MentionSpan]) -> RedactedQuery:
    """Replace mention spans with numbered typed placeholders, left to right."""
    ordered = sorted(spans, key=lambda s: s.start)
    for a, b in zip(ordered, ordered[1:]):
        if b.start < a.end:
            raise CacheError(f"overlapping mention spans at {a.start}..{a.end} and {b.start}..{b.end}")
    counters = {"PLAYER": 0, "TEAM": 0}
    out: list[str] = []
    slots: list[Slot] = []
    cursor = 0
    for span in ordered:
        if span.kind not in counters:
            raise CacheError(f"unknown mention kind {span.kind!r}")
        if prompt[span.start:span.end] != span.mention:
            raise CacheError(f"span {span.start}..{span.end} does not spell {span.mention!r}")
        counters[span.kind] += 1
        placeholder = f"[{span.kind}{counters[span.kind]}]"
        out.append(prompt[cursor:span.start])
        out.append(placeholder)
        slots.append(Slot(placeholder=placeholder, kind=span.kind,
                          start=span.start, end=span.end, mention=span.mention))
        cursor = span.end
    out.append(prompt[cursor:])
    return RedactedQuery(text="".join(out), slots=tuple(slots))


def fill(redacted: RedactedQuery, mentions: Sequence[str]) -> str:
    """Inverse of redact: positional placeholder substitution."""
    if len(mentions) != len(redacted.slots):
        raise CacheError(f"expected {len(redacted.slots)} mentions, got {len(mentions)}")
    text = redacted.text
    for slot, mention in zip(redacted.slots, mentions):
        text = text.replace(slot.placeholder, mention, 1)
    return text


def embed(text: str) -> np.ndarray:
    if not text:
        raise CacheError("cannot embed empty text")
    tokens = text.split()
    features = ([f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
                if len(tokens) > 1 else list(tokens))
    vector = np.zeros(EMBEDDING_DIM, dtype=np.float64)
    for feature in features:
        digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=5).digest()
        index = int.from_bytes(digest[:4], "big") % EMBEDDING_DIM
        vector[index] += 1.0 if digest[4] & 1 else -1.0
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        digest = hashlib.blake2b(text.encode("utf-8"), digest_size=5).digest()
        vector[int.from_bytes(digest[:4], "big") % EMBEDDING_DIM] = 1.0
        norm = 1.0
    return vector / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b))


@dataclass(frozen=True)
class CacheEntry:
    redacted: RedactedQuery
    embedding: np.ndarray
    request_template: CompiledQuery
    schema_names: tuple[str, ...]
    created_at: float
    hit_count: int
    seq: int  # recency for tie-breaks and eviction; newer is larger

    def to_json(self) -> dict:
        return {
            "redacted": self.redacted.to_json(),
            "embedding": [float(x) for x in self.embedding],
            "request_template": query_to_wire(self.request_template),
            "schema_names": list(self.schema_names),
            "created_at": self.created_at,
            "hit_count": self.hit_count,
        }


@dataclass(frozen=True)
class CacheHit:
    entry: CacheEntry
    similarity: float


def templatize(requests: CompiledQuery, slots: Sequence[Slot],
               slot_ids: Sequence[int | str]) -> CompiledQuery | None:
    """Swap resolved entity IDs back out for their slot placeholders.

    Returns None when the rewrite would be unsound: some slot's id never
    appears on the field its kind owns, or two slots carry the same id
    (positional substitution could not be inverted).
    """
    if len(slots) != len(slot_ids):
        raise CacheError("slot/id arity mismatch")
    by_id: dict[tuple[str, int | str], str] = {}
    for slot, entity_id in zip(slots, slot_ids):
        key = (PLACEHOLDER_FIELDS[slot.kind], entity_id)
        if key in by_id:
            return None
        by_id[key] = slot.placeholder
    used: set[str] = set()
    templated: list[SearchRequest] = []
    for request in requests:
        clauses = []
        for clause in request.clauses:
            if isinstance(clause, TermClause):
                placeholder = by_id.get((clause.field, clause.value))
                if placeholder is not None:
                    used.add(placeholder)
                    clause = TermClause(field=clause.field, value=placeholder)
            clauses.append(clause)
        templated.append(SearchRequest(schema_name=request.schema_name, clauses=tuple(clauses)))
    if used != {s.placeholder for s in slots}:
        return None
    return tuple(templated)


def instantiate(entry: CacheEntry, fresh: Sequence[tuple[str, int | str]]) -> CompiledQuery:
    """Positional substitution of fresh (kind, id) pairs into the template."""
    slots = entry.redacted.slots
    if len(fresh) != len(slots):
        raise CacheError(f"template has {len(slots)} slots, got {len(fresh)} entities")
    substitution: dict[str, int | str] = {}
    for slot, (kind, entity_id) in zip(slots, fresh):
        if kind != slot.kind:
            raise CacheError(f"slot {slot.placeholder} expects {slot.kind}, got {kind}")
        substitution[slot.placeholder] = entity_id
    out: list[SearchRequest] = []
    for request in entry.request_template:
        clauses = []
        for clause in request.clauses:
            if isinstance(clause, TermClause) and clause.value in substitution:
                clause = TermClause(field=clause.field, value=substitution[clause.value])
            elif isinstance(clause, InClause):
                values = tuple(substitution.get(v, v) for v in clause.values)
                clause = InClause(field=clause.field, values=values)
            clauses.append(clause)
        out.append(SearchRequest(schema_name=request.schema_name, clauses=tuple(clauses)))
    return tuple(out)


class SemanticCache:
    def __init__(self, threshold: float = DEFAULT_THRESHOLD,
                 capacity: int = DEFAULT_CAPACITY):
        if not 0.0 < threshold <= 1.0:
            raise CacheError(f"threshold must be in (0, 1], got {threshold}")
        self.threshold = threshold
        self.capacity = capacity
        self._entries: list[CacheEntry] = []
        self._by_text: dict[str, int] = {}
        self._last_used: dict[int, int] = {}  # seq -> last lookup/insert tick
        self._tick = 0
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> tuple[CacheEntry, ...]:
        with self._lock:
            return tuple(self._entries)

    def lookup(self, redacted: RedactedQuery) -> CacheHit | None:
        probe = embed(redacted.text)
        with self._lock:
            if not self._entries:
                return None
            best: CacheEntry | None = None
            best_sim = -2.0
            for entry in self._entries:
                sim = cosine(probe, entry.embedding)
                if sim > best_sim or (sim == best_sim and best is not None and entry.seq > best.seq):
                    best, best_sim = entry, sim
            assert best is not None
            if best_sim < self.threshold or best.redacted.slot_kinds != redacted.slot_kinds:
                return None
            self._tick += 1
            self._last_used[best.seq] = self._tick
            bumped = replace(best, hit_count=best.hit_count + 1)
            self._entries[self._by_text[best.redacted.text]] = bumped
            return CacheHit(entry=bumped, similarity=best_sim)

    def insert(self, redacted: RedactedQuery, request_template: CompiledQuery,
               schema_names: Sequence[str], created_at: float) -> CacheEntry:
        template_placeholders = _collect_placeholders(request_template)
        if template_placeholders != {s.placeholder for s in redacted.slots}:
            raise CacheError("template placeholders do not match redacted slots")
        with self._lock:
            self._tick += 1
            existing_index = self._by_text.get(redacted.text)
            if existing_index is not None:
                old = self._entries[existing_index]
                entry = CacheEntry(redacted=redacted, embedding=embed(redacted.text),
                                   request_template=canonical_query(request_template),
                                   schema_names=tuple(schema_names),
                                   created_at=created_at, hit_count=old.hit_count,
                                   seq=old.seq)
                self._entries[existing_index] = entry
                self._last_used[entry.seq] = self._tick
                return entry
            entry = CacheEntry(redacted=redacted, embedding=embed(redacted.text),
                               request_template=canonical_query(request_template),
                               schema_names=tuple(schema_names),
                               created_at=created_at, hit_count=0, seq=self._tick)
            self._entries.append(entry)
            self._by_text[redacted.text] = len(self._entries) - 1
            self._last_used[entry.seq] = self._tick
            if len(self._entries) > self.capacity:
                self._evict_one()
            return entry

    def invalidate(self, redacted_text: str) -> bool:
        with self._lock:
            index = self._by_text.get(redacted_text)
            if index is None:
                return False
            entry = self._entries.pop(index)
            self._last_used.pop(entry.seq, None)
            self._reindex()
            return True

    def _evict_one(self) -> None:
        victim_pos = min(range(len(self._entries)),
                         key=lambda i: self._last_used[self._entries[i].seq])
        victim = self._entries.pop(victim_pos)
        self._last_used.pop(victim.seq, None)
        self._reindex()

    def _reindex(self) -> None:
        self._by_text = {e.redacted.text: i for i, e in enumerate(self._entries)}

    # -- snapshot ------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        with self._lock:
            docs = [e.to_json() for e in self._entries]
        with open(path, "w") as fh:
            json.dump(docs, fh, sort_keys=True, separators=(",", ":"))

    def load(self, path: str | Path) -> int:
        try:
            with open(path) as fh:
                docs = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CacheError(f"cannot load cache snapshot {path}: {exc}") from exc
        with self._lock:
            self._entries.clear()
            self._last_used.clear()
            self._tick = 0
            for doc in docs:
                self._tick += 1
                entry = CacheEntry(
                    redacted=RedactedQuery.from_json(doc["redacted"]),
                    embedding=np.asarray(doc["embedding"], dtype=np.float64),
                    request_template=query_from_wire(doc["request_template"]),
                    schema_names=tuple(doc["schema_names"]),
                    created_at=doc["created_at"],
                    hit_count=doc["hit_count"],
                    seq=self._tick,
                )
                self._entries.append(entry)
                self._last_used[entry.seq] = self._tick
            self._reindex()
            return len(self._entries)


def _collect_placeholders(requests: CompiledQuery) -> set[str]:
    found: set[str] = set()
    for request in requests:
        for clause in request.clauses:
            values: Iterable = ()
            if isinstance(clause, TermClause):
                values = (clause.value,)
            elif isinstance(clause, InClause):
                values = clause.values
            for value in values:
                if isinstance(value, str) and value.startswith("[") and value.endswith("]"):
                    found.add(value)
    return found
