"""Structured search requests and their frozen wire format.

A SearchRequest is a conjunction of filter clauses against one schema:

    {"schema": "PASSING", "clauses": [
        {"op": "term",  "field": "touchdown", "value": 1},
        {"op": "range", "field": "passYards", "value": {"cmp": "gt", "bound": 10}},
        {"op": "in",    "field": "nflId",     "value": [300017, 300122]}]}

Clause order is canonicalized (field, then op, then value) before
serialization so that cache equality and evaluation scoring can compare
requests byte for byte. Queries that span several schemas are carried as
an ordered list of single-schema requests, serialized as a JSON array and
answered by intersecting per-schema results.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class TermClause:
    field: str
    value: object  # scalar: int | float | str

    def to_wire(self) -> dict:
        return {"op": "term", "field": self.field, "value": self.value}


@dataclass(frozen=True)
class RangeClause:
    field: str
    cmp: str  # gt | gte | lt | lte
    bound: float

    def to_wire(self) -> dict:
        return {"op": "range", "field": self.field, "value": {"cmp": self.cmp, "bound": self.bound}}


@dataclass(frozen=True)
class InClause:
    field: str
    values: tuple

    def to_wire(self) -> dict:
        return {"op": "in", "field": self.field, "value": list(self.values)}


FilterClause = Union[TermClause, RangeClause, InClause]

_RANGE_CMPS = ("gt", "gte", "lt", "lte")


def clause_from_wire(doc: dict) -> FilterClause:
    op = doc.get("op")
    field = doc.get("field")
    value = doc.get("value")
    if not isinstance(field, str):
        raise ValueError(f"clause is missing a field name: {doc!r}")
    if op == "term":
        return TermClause(field=field, value=value)
    if op == "range":
        if not isinstance(value, dict) or value.get("cmp") not in _RANGE_CMPS:
            raise ValueError(f"malformed range clause: {doc!r}")
        return RangeClause(field=field, cmp=value["cmp"], bound=value["bound"])
    if op == "in":
        if not isinstance(value, list):
            raise ValueError(f"malformed in clause: {doc!r}")
        return InClause(field=field, values=tuple(value))
    raise ValueError(f"unknown clause op {op!r}")


def _value_sort_key(clause: FilterClause) -> str:
    return json.dumps(clause.to_wire()["value"], sort_keys=True, default=str)


def _clause_sort_key(clause: FilterClause) -> tuple:
    return (clause.field, clause.to_wire()["op"], _value_sort_key(clause))


@dataclass(frozen=True)
class SearchRequest:
    schema_name: str
    clauses: tuple[FilterClause, ...]

    def canonicalized(self) -> "SearchRequest":
        """Sorted clause order; 'in' value lists sorted as well."""
        clauses = tuple(
            InClause(c.field, tuple(sorted(c.values, key=lambda v: (str(type(v).__name__), str(v)))))
            if isinstance(c, InClause) else c
            for c in self.clauses
        )
        return SearchRequest(self.schema_name, tuple(sorted(clauses, key=_clause_sort_key)))

    def to_wire(self) -> dict:
        return {"schema": self.schema_name, "clauses": [c.to_wire() for c in self.clauses]}

    @classmethod
    def from_wire(cls, doc: dict) -> "SearchRequest":
        schema = doc.get("schema")
        if not isinstance(schema, str):
            raise ValueError(f"request is missing a schema name: {doc!r}")
        raw = doc.get("clauses")
        if not isinstance(raw, list):
            raise ValueError("request needs a 'clauses' list")
        return cls(schema_name=schema, clauses=tuple(clause_from_wire(c) for c in raw))


# A compiled query: one request per schema, ordered by schema name. Almost
# always a single request; difficult prompts may fan out.
CompiledQuery = tuple[SearchRequest, ...]


def canonical_query(requests: CompiledQuery) -> CompiledQuery:
    return tuple(sorted((r.canonicalized() for r in requests), key=lambda r: r.schema_name))


def query_to_wire(requests: CompiledQuery) -> object:
    """Single requests serialize as an object, multi-schema as an array."""
    if len(requests) == 1:
        return requests[0].to_wire()
    return [r.to_wire() for r in requests]


def query_from_wire(doc: object) -> CompiledQuery:
    if isinstance(doc, dict):
        return (SearchRequest.from_wire(doc),)
    if isinstance(doc, list):
        return tuple(SearchRequest.from_wire(d) for d in doc)
    raise ValueError("expected a request object or an array of request objects")


def canonical_json(requests: CompiledQuery) -> str:
    """The bit-exact serialization used for cache and scoring equality."""
    return json.dumps(query_to_wire(canonical_query(requests)),
                      sort_keys=True, separators=(",", ":"))


def digest(payload: object) -> str:
    """Short stable digest of any JSON-serializable payload, for traces."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def range_constraints_satisfiable(clauses: list[FilterClause]) -> bool:
    """True unless range clauses on some field pin an empty interval."""
    by_field: dict[str, list[RangeClause]] = {}
    for c in clauses:
        if isinstance(c, RangeClause):
            by_field.setdefault(c.field, []).append(c)
    for ranges in by_field.values():
        lo, lo_strict = float("-inf"), False
        hi, hi_strict = float("inf"), False
        for r in ranges:
            if r.cmp in ("gt", "gte"):
                strict = r.cmp == "gt"
                if r.bound > lo or (r.bound == lo and strict):
                    lo, lo_strict = r.bound, strict
            else:
                strict = r.cmp == "lt"
                if r.bound < hi or (r.bound == hi and strict):
                    hi, hi_strict = r.bound, strict
        if lo > hi or (lo == hi and (lo_strict or hi_strict)):
            return False
    return True


@dataclass(frozen=True)
class SearchResult:
    play_ids: tuple[str, ...]

    @property
    def count(self) -> int:
        return len(self.play_ids)

    def to_wire(self) -> dict:
        return {"play_ids": list(self.play_ids), "count": self.count}
