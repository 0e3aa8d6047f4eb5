"""Pluggable language-model boundary.

The pipeline never talks to a model directly; it submits typed tasks to a
backend and gets typed outcomes back. Two backends ship: a deterministic
grammar parser over a constrained query-English subset (`grammar`, the
test default) and a provider-neutral JSON-over-HTTP client (`remote`).

Task context payloads are plain JSON objects, frozen per kind:

    CLASSIFY_INTENT   {"prompt": str}                        -> intent label str
    DECOMPOSE         {"prompt": str}                        -> Decomposition json
    ROUTE_SCHEMA      {"decomposition": {...}}               -> [schema name, ...]
    FORMULATE         {"decomposition": {...},
                       "schemas": [str, ...]}                -> request wire
    REPAIR            {"request": wire, "error": details}    -> request wire
    SUMMARIZE         {"request": wire, "count": int}        -> answer text
    REWRITE_FOLLOWUP  {"prompt": str, "prior_prompt": str}   -> rewritten text
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Protocol


class TaskKind(str, Enum):
    CLASSIFY_INTENT = "CLASSIFY_INTENT"
    DECOMPOSE = "DECOMPOSE"
    ROUTE_SCHEMA = "ROUTE_SCHEMA"
    FORMULATE = "FORMULATE"
    REPAIR = "REPAIR"
    SUMMARIZE = "SUMMARIZE"
    REWRITE_FOLLOWUP = "REWRITE_FOLLOWUP"


class IntentLabel(str, Enum):
    FOOTBALL_QUERY = "FOOTBALL_QUERY"
    OUT_OF_SCOPE = "OUT_OF_SCOPE"


@dataclass(frozen=True)
class LmTask:
    kind: TaskKind
    context: dict


@dataclass(frozen=True)
class LmOutcome:
    kind: TaskKind
    result: object
    trace: str = ""


@dataclass(frozen=True)
class EntityMention:
    mention: str
    kind: str  # PLAYER | TEAM
    start: int  # character offsets into the normalized prompt
    end: int
    role: str = "SUBJECT"  # SUBJECT | OPPONENT ("against <team>")
    resolved_id: int | str | None = None

    def resolved(self, entity_id: int | str) -> "EntityMention":
        return replace(self, resolved_id=entity_id)

    def to_json(self) -> dict:
        return {"mention": self.mention, "kind": self.kind, "start": self.start,
                "end": self.end, "role": self.role, "resolved_id": self.resolved_id}

    @classmethod
    def from_json(cls, doc: dict) -> "EntityMention":
        return cls(mention=doc["mention"], kind=doc["kind"], start=doc["start"],
                   end=doc["end"], role=doc.get("role", "SUBJECT"),
                   resolved_id=doc.get("resolved_id"))


@dataclass(frozen=True)
class Decomposition:
    """Entity / action / condition split of one normalized prompt."""

    normalized: str
    entities: tuple[EntityMention, ...]
    actions: tuple[str, ...]  # canonical action names, first is primary
    conditions: tuple[str, ...]  # canonical condition tokens

    def to_json(self) -> dict:
        return {"normalized": self.normalized,
                "entities": [e.to_json() for e in self.entities],
                "actions": list(self.actions),
                "conditions": list(self.conditions)}

    @classmethod
    def from_json(cls, doc: dict) -> "Decomposition":
        return cls(normalized=doc["normalized"],
                   entities=tuple(EntityMention.from_json(e) for e in doc["entities"]),
                   actions=tuple(doc["actions"]),
                   conditions=tuple(doc["conditions"]))


class LmBackend(Protocol):
    name: str

    def complete(self, task: LmTask) -> LmOutcome: ...
