"""In-memory play store: ingest, per-field indexes, request execution.

Every play is one record. Schema field keys (camelCase, as the query layer
sees them) map onto record attributes (snake_case, as the dataset file
spells them); DEFENSE schema fields about individual defenders are
"defender-scoped": a play satisfies a group of defender-scoped clauses only
if a single defender satisfies all of them at once.

`execute` answers through the indexes; `brute_force_count` is the
independent linear-scan oracle used to verify it and to pin evaluation
ground truths. The two paths share no matching code.
"""

from __future__ import annotations

import bisect
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import ExecutionError, IngestError
from .query import (
    FilterClause,
    InClause,
    RangeClause,
    SearchRequest,
    SearchResult,
    TermClause,
    range_constraints_satisfiable,
)
from .schemas import SchemaRegistry

SEASON_TYPES = ("REG", "POST")
PLAY_TYPES = ("PASS", "RUSH", "OTHER")
FORMATIONS = ("UNDER_CENTER", "SHOTGUN", "PISTOL", "EMPTY")


@dataclass(frozen=True)
class Alignment:
    edge: int  # 0 | 1
    direction: str  # LEFT | RIGHT


@dataclass(frozen=True)
class PlayRecord:
    play_id: str
    game_id: str
    season: int
    season_type: str
    week: int
    play_type: str
    offense_team_id: str
    defense_team_id: str
    actor_nfl_id: int
    touchdown: int
    interception: int
    formation: str
    pass_yards: float | None = None
    rush_yards: float | None = None
    defender_ids: tuple[int, ...] = ()
    defender_alignment: dict[int, Alignment] = field(default_factory=dict)

    def check(self) -> None:
        """Raise IngestError on any record invariant violation."""
        def bad(field_name: str, why: str) -> IngestError:
            return IngestError(f"record {self.play_id}: field {field_name}: {why}")

        if self.season_type not in SEASON_TYPES:
            raise bad("season_type", f"{self.season_type!r} not in {SEASON_TYPES}")
        if self.week < 1:
            raise bad("week", "must be >= 1")
        if self.play_type not in PLAY_TYPES:
            raise bad("play_type", f"{self.play_type!r} not in {PLAY_TYPES}")
        if self.formation not in FORMATIONS:
            raise bad("formation", f"{self.formation!r} not in {FORMATIONS}")
        if self.touchdown not in (0, 1):
            raise bad("touchdown", "must be 0 or 1")
        if self.interception not in (0, 1):
            raise bad("interception", "must be 0 or 1")
        if self.play_type == "PASS" and self.rush_yards is not None:
            raise bad("rush_yards", "must be absent on a pass play")
        if self.play_type == "RUSH" and self.pass_yards is not None:
            raise bad("pass_yards", "must be absent on a rush play")
        if self.interception == 1 and self.play_type != "PASS":
            raise bad("interception", "only pass plays can be intercepted")
        if self.pass_yards is not None and self.pass_yards < 0:
            raise bad("pass_yards", "must be >= 0")
        if self.rush_yards is not None and self.rush_yards < 0:
            raise bad("rush_yards", "must be >= 0")

    def to_json(self) -> dict:
        doc: dict = {
            "play_id": self.play_id,
            "game_id": self.game_id,
            "season": self.season,
            "season_type": self.season_type,
            "week": self.week,
            "play_type": self.play_type,
            "offense_team_id": self.offense_team_id,
            "defense_team_id": self.defense_team_id,
            "actor_nfl_id": self.actor_nfl_id,
            "touchdown": self.touchdown,
            "interception": self.interception,
            "formation": self.formation,
            "defender_ids": list(self.defender_ids),
        }
        if self.pass_yards is not None:
            doc["pass_yards"] = self.pass_yards
        if self.rush_yards is not None:
            doc["rush_yards"] = self.rush_yards
        if self.defender_alignment:
            doc["defender_alignment"] = {
                str(did): {"edge": a.edge, "direction": a.direction}
                for did, a in self.defender_alignment.items()
            }
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "PlayRecord":
        try:
            alignment = {
                int(did): Alignment(edge=a["edge"], direction=a["direction"])
                for did, a in doc.get("defender_alignment", {}).items()
            }
            return cls(
                play_id=doc["play_id"],
                game_id=doc["game_id"],
                season=doc["season"],
                season_type=doc["season_type"],
                week=doc["week"],
                play_type=doc["play_type"],
                offense_team_id=doc["offense_team_id"],
                defense_team_id=doc["defense_team_id"],
                actor_nfl_id=doc["actor_nfl_id"],
                touchdown=doc["touchdown"],
                interception=doc["interception"],
                formation=doc["formation"],
                pass_yards=doc.get("pass_yards"),
                rush_yards=doc.get("rush_yards"),
                defender_ids=tuple(doc.get("defender_ids", ())),
                defender_alignment=alignment,
            )
        except KeyError as exc:
            raise IngestError(f"record {doc.get('play_id', '<missing play_id>')}: missing field {exc}") from exc


def sort_key(record: PlayRecord) -> tuple:
    return (record.season, record.week, record.play_id)


# (schema, field key) -> record attribute, for play-scoped fields.
_COMMON = {"season": "season", "seasonType": "season_type", "week": "week",
           "gameId": "game_id", "playType": "play_type"}
PLAY_FIELD_MAP: dict[tuple[str, str], str] = {}
for _schema in ("PASSING", "RUSHING", "DEFENSE", "TEAM_OFFENSE", "TEAM_DEFENSE"):
    for _k, _attr in _COMMON.items():
        PLAY_FIELD_MAP[(_schema, _k)] = _attr
PLAY_FIELD_MAP.update({
    ("PASSING", "nflId"): "actor_nfl_id",
    ("RUSHING", "nflId"): "actor_nfl_id",
    ("PASSING", "passYards"): "pass_yards",
    ("RUSHING", "rushYards"): "rush_yards",
    ("PASSING", "touchdown"): "touchdown",
    ("RUSHING", "touchdown"): "touchdown",
    ("TEAM_OFFENSE", "touchdown"): "touchdown",
    ("TEAM_DEFENSE", "touchdown"): "touchdown",
    ("PASSING", "interception"): "interception",
    ("DEFENSE", "interception"): "interception",
    ("TEAM_DEFENSE", "interception"): "interception",
    ("PASSING", "teamId"): "offense_team_id",
    ("RUSHING", "teamId"): "offense_team_id",
    ("TEAM_OFFENSE", "teamId"): "offense_team_id",
    ("DEFENSE", "teamId"): "defense_team_id",
    ("TEAM_DEFENSE", "teamId"): "defense_team_id",
    ("TEAM_OFFENSE", "offFormation"): "formation",
    ("TEAM_OFFENSE", "passYards"): "pass_yards",
    ("TEAM_OFFENSE", "rushYards"): "rush_yards",
    ("TEAM_DEFENSE", "passYards"): "pass_yards",
})

# DEFENSE fields that constrain one defender at a time.
DEFENDER_FIELDS = ("nflId", "playerAlignmentEDGE", "alignmentDirection")

_RANGE_ATTRS = ("pass_yards", "rush_yards")


def _defender_value(record: PlayRecord, defender_id: int, key: str):
    if key == "nflId":
        return defender_id
    align = record.defender_alignment.get(defender_id)
    if align is None:
        return None
    return align.edge if key == "playerAlignmentEDGE" else align.direction


class PlayStore:
    """Read-only after ingest; any number of concurrent execute calls."""

    def __init__(self, registry: SchemaRegistry):
        self._registry = registry
        self._records: dict[str, PlayRecord] = {}
        self._ordered_ids: list[str] = []
        self._term_index: dict[str, dict[object, set[str]]] = {}
        self._range_index: dict[str, tuple[list[float], list[str]]] = {}
        self._defender_index: dict[str, dict[object, set[tuple[str, int]]]] = {}
        self._sealed = False
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._records)

    @property
    def registry(self) -> SchemaRegistry:
        return self._registry

    def records(self) -> Iterator[PlayRecord]:
        return iter(self._records[pid] for pid in self._ordered_ids)

    def get(self, play_id: str) -> PlayRecord | None:
        return self._records.get(play_id)

    def ingest(self, records: Iterable[PlayRecord]) -> "PlayStore":
        with self._lock:
            if self._sealed:
                raise IngestError("store already ingested; it is immutable afterwards")
            for record in records:
                if record.play_id in self._records:
                    raise IngestError(f"duplicate play_id {record.play_id!r}")
                record.check()
                self._records[record.play_id] = record
            self._build_indexes()
            self._sealed = True
        return self

    def _build_indexes(self) -> None:
        self._ordered_ids = sorted(self._records, key=lambda pid: sort_key(self._records[pid]))
        play_attrs = sorted({a for a in PLAY_FIELD_MAP.values() if a not in _RANGE_ATTRS})
        for attr in play_attrs:
            self._term_index[attr] = {}
        range_pairs: dict[str, list[tuple[float, str]]] = {a: [] for a in _RANGE_ATTRS}
        for key in DEFENDER_FIELDS:
            self._defender_index[key] = {}
        for pid in self._ordered_ids:
            r = self._records[pid]
            for attr in play_attrs:
                value = getattr(r, attr)
                if value is None:
                    continue
                self._term_index[attr].setdefault(value, set()).add(pid)
            for attr in _RANGE_ATTRS:
                value = getattr(r, attr)
                if value is not None:
                    range_pairs[attr].append((value, pid))
            for did in r.defender_ids:
                for key in DEFENDER_FIELDS:
                    value = _defender_value(r, did, key)
                    if value is not None:
                        self._defender_index[key].setdefault(value, set()).add((pid, did))
        for attr, pairs in range_pairs.items():
            pairs.sort()
            self._range_index[attr] = ([v for v, _ in pairs], [p for _, p in pairs])

    # -- execution ---------------------------------------------------------

    def validate_request(self, request: SearchRequest) -> dict | None:
        """Machine-readable rejection detail, or None when the request is legal."""
        schema = self._registry.get(request.schema_name)
        if schema is None:
            return {"code": "unknown_schema", "schema": request.schema_name, "field": None,
                    "suggestion": None, "message": f"unknown schema {request.schema_name!r}"}
        term_fields: set[str] = set()
        for clause in request.clauses:
            violation = self._registry.validate_filter(schema, clause.field, clause)
            if violation is not None:
                return {"code": violation.code, "schema": schema.name, "field": violation.field,
                        "suggestion": violation.suggestion, "message": violation.message}
            if isinstance(clause, TermClause):
                if clause.field in term_fields:
                    return {"code": "conflicting_terms", "schema": schema.name, "field": clause.field,
                            "suggestion": None,
                            "message": f"more than one term clause on field '{clause.field}'"}
                term_fields.add(clause.field)
        if not range_constraints_satisfiable(list(request.clauses)):
            return {"code": "unsatisfiable_range", "schema": schema.name, "field": None,
                    "suggestion": None, "message": "range clauses pin an empty interval"}
        return None

    def execute(self, request: SearchRequest) -> SearchResult:
        detail = self.validate_request(request)
        if detail is not None:
            raise ExecutionError(detail)
        play_sets: list[set[str]] = []
        defender_sets: list[set[tuple[str, int]]] = []
        for clause in request.clauses:
            if request.schema_name == "DEFENSE" and clause.field in DEFENDER_FIELDS:
                defender_sets.append(self._defender_candidates(clause))
            else:
                play_sets.append(self._play_candidates(request.schema_name, clause))
        if defender_sets:
            pairs = set.intersection(*defender_sets)
            play_sets.append({pid for pid, _ in pairs})
        if not play_sets:
            matched = set(self._ordered_ids)
        else:
            play_sets.sort(key=len)
            matched = play_sets[0].intersection(*play_sets[1:]) if len(play_sets) > 1 else play_sets[0]
        ordered = sorted(matched, key=lambda pid: sort_key(self._records[pid]))
        return SearchResult(play_ids=tuple(ordered))

    def _play_candidates(self, schema_name: str, clause: FilterClause) -> set[str]:
        attr = PLAY_FIELD_MAP[(schema_name, clause.field)]
        if isinstance(clause, RangeClause):
            values, pids = self._range_index[attr]
            if clause.cmp == "gt":
                lo = bisect.bisect_right(values, clause.bound)
                return set(pids[lo:])
            if clause.cmp == "gte":
                lo = bisect.bisect_left(values, clause.bound)
                return set(pids[lo:])
            if clause.cmp == "lt":
                hi = bisect.bisect_left(values, clause.bound)
                return set(pids[:hi])
            hi = bisect.bisect_right(values, clause.bound)
            return set(pids[:hi])
        index = self._term_index[attr]
        if isinstance(clause, TermClause):
            return set(index.get(clause.value, ()))
        out: set[str] = set()
        for v in clause.values:
            out |= index.get(v, set())
        return out

    def _defender_candidates(self, clause: FilterClause) -> set[tuple[str, int]]:
        index = self._defender_index[clause.field]
        if isinstance(clause, TermClause):
            return set(index.get(clause.value, ()))
        assert isinstance(clause, InClause)
        out: set[tuple[str, int]] = set()
        for v in clause.values:
            out |= index.get(v, set())
        return out

    # -- oracle ------------------------------------------------------------

    def brute_force_count(self, predicate: Callable[[PlayRecord], bool]) -> int:
        """Linear scan; consults no indexes."""
        n = 0
        for pid in self._ordered_ids:
            if predicate(self._records[pid]):
                n += 1
        return n


def _clause_holds(record: PlayRecord, schema_name: str, clause: FilterClause) -> bool:
    value = getattr(record, PLAY_FIELD_MAP[(schema_name, clause.field)])
    if value is None:
        return False
    if isinstance(clause, TermClause):
        return value == clause.value
    if isinstance(clause, InClause):
        return value in clause.values
    if clause.cmp == "gt":
        return value > clause.bound
    if clause.cmp == "gte":
        return value >= clause.bound
    if clause.cmp == "lt":
        return value < clause.bound
    return value <= clause.bound


def _defender_clause_holds(record: PlayRecord, defender_id: int, clause: FilterClause) -> bool:
    value = _defender_value(record, defender_id, clause.field)
    if value is None:
        return False
    if isinstance(clause, TermClause):
        return value == clause.value
    assert isinstance(clause, InClause)
    return value in clause.values


def request_predicate(request: SearchRequest) -> Callable[[PlayRecord], bool]:
    """Compile a request into a plain record predicate for the oracle path.

    Deliberately index-free: this is the other half of the dual-route check
    against `PlayStore.execute`.
    """
    play_clauses = []
    defender_clauses = []
    for clause in request.clauses:
        if request.schema_name == "DEFENSE" and clause.field in DEFENDER_FIELDS:
            defender_clauses.append(clause)
        else:
            play_clauses.append(clause)

    def predicate(record: PlayRecord) -> bool:
        for clause in play_clauses:
            if not _clause_holds(record, request.schema_name, clause):
                return False
        if defender_clauses:
            return any(
                all(_defender_clause_holds(record, did, c) for c in defender_clauses)
                for did in record.defender_ids
            )
        return True

    return predicate


def compound_predicate(requests: Iterable[SearchRequest]) -> Callable[[PlayRecord], bool]:
    predicates = [request_predicate(r) for r in requests]

    def predicate(record: PlayRecord) -> bool:
        return all(p(record) for p in predicates)

    return predicate


# -- dataset file IO -------------------------------------------------------

def write_dataset(records: Iterable[PlayRecord], path: str | Path) -> int:
    """Newline-delimited JSON, one record per line. Returns record count."""
    n = 0
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), sort_keys=True, separators=(",", ":")))
            fh.write("\n")
            n += 1
    return n


def read_dataset(path: str | Path) -> Iterator[PlayRecord]:
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            yield PlayRecord.from_json(doc)
