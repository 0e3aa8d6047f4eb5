"""Statistical schema registry.

Each schema is one JSON document describing the fields a query may filter
on: key, kind (one-of-list / range / singular), scalar format, legal
values or numeric interval, and a prose explanation. The registry loads a
directory of such documents once at startup and is immutable afterwards;
`validate_filter` is the single legality check used by the query compiler,
the executor, and the cache instantiation path.
"""

from __future__ import annotations

import difflib
import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import SchemaLoadError
from .query import FilterClause, InClause, RangeClause, TermClause

SCHEMA_NAMES = ("PASSING", "RUSHING", "DEFENSE", "TEAM_OFFENSE", "TEAM_DEFENSE")

_PLAYER_SCHEMAS = {"PASSING", "RUSHING", "DEFENSE"}
_TEAM_SCHEMAS = {"TEAM_OFFENSE", "TEAM_DEFENSE"}

# Explanations may mark an open identifier set ("NFL ID is a unique
# identifier ...") in place of an enumerated values list.
_OPEN_ID_MARKER = re.compile(r"\b(id|identifier)\b", re.IGNORECASE)


class FieldKind(str, Enum):
    ONE_OF_LIST = "one-of-list"
    RANGE = "range"
    SINGULAR = "singular"


class FieldFormat(str, Enum):
    INTEGER = "integer"
    FLOAT = "float"
    STRING = "string"


@dataclass(frozen=True)
class Interval:
    """Closed numeric interval; either bound may be infinite."""

    min: float
    max: float

    def contains(self, value: float) -> bool:
        return self.min <= value <= self.max


@dataclass(frozen=True)
class FieldSpec:
    key: str
    kind: FieldKind
    format: FieldFormat
    legal_values: tuple | None = None
    interval: Interval | None = None
    explanation: str = ""

    @property
    def open_id_set(self) -> bool:
        return self.kind is FieldKind.ONE_OF_LIST and self.legal_values is None


@dataclass(frozen=True)
class Violation:
    """A rejected filter clause; a value, never an exception."""

    code: str
    field: str
    message: str
    suggestion: str | None = None


@dataclass(frozen=True)
class Schema:
    name: str
    description: str
    fields: dict[str, FieldSpec] = field(default_factory=dict)

    def to_doc(self) -> dict:
        """Serialize back to the on-disk document shape."""
        out = []
        for spec in self.fields.values():
            doc: dict = {
                "key": spec.key,
                "kind": spec.kind.value,
                "format": spec.format.value,
                "explanation": spec.explanation,
            }
            if spec.interval is not None:
                doc["values"] = {
                    "min": "-inf" if math.isinf(spec.interval.min) else spec.interval.min,
                    "max": "inf" if math.isinf(spec.interval.max) else spec.interval.max,
                }
            elif spec.legal_values is not None:
                doc["values"] = list(spec.legal_values)
            out.append(doc)
        return {"name": self.name, "description": self.description, "fields": out}


def _parse_bound(raw, *, filename: str, key: str) -> float:
    if raw == "inf":
        return math.inf
    if raw == "-inf":
        return -math.inf
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    raise SchemaLoadError(f"{filename}: field '{key}': interval bound {raw!r} is not numeric or inf")


def _check_scalar_format(value, fmt: FieldFormat) -> bool:
    if isinstance(value, bool):
        return False
    if fmt is FieldFormat.INTEGER:
        return isinstance(value, int)
    if fmt is FieldFormat.FLOAT:
        return isinstance(value, (int, float))
    return isinstance(value, str)


def _parse_field(doc: dict, filename: str) -> FieldSpec:
    try:
        key = doc["key"]
        kind = FieldKind(doc["kind"])
        fmt = FieldFormat(doc["format"])
    except (KeyError, ValueError) as exc:
        raise SchemaLoadError(f"{filename}: malformed field document: {exc}") from exc
    explanation = doc.get("explanation", "")
    values = doc.get("values")

    legal_values: tuple | None = None
    interval: Interval | None = None
    if isinstance(values, dict):
        interval = Interval(
            min=_parse_bound(values.get("min", "-inf"), filename=filename, key=key),
            max=_parse_bound(values.get("max", "inf"), filename=filename, key=key),
        )
    elif isinstance(values, list):
        for v in values:
            if not _check_scalar_format(v, fmt):
                raise SchemaLoadError(
                    f"{filename}: field '{key}': legal value {v!r} does not match format {fmt.value}"
                )
        legal_values = tuple(values)
    elif values is not None:
        raise SchemaLoadError(f"{filename}: field '{key}': 'values' must be a list or interval object")

    spec = FieldSpec(key=key, kind=kind, format=fmt, legal_values=legal_values,
                     interval=interval, explanation=explanation)
    _check_field_invariants(spec, filename)
    return spec


def _check_field_invariants(spec: FieldSpec, filename: str) -> None:
    if spec.kind is FieldKind.RANGE:
        if spec.format is FieldFormat.STRING:
            raise SchemaLoadError(f"{filename}: field '{spec.key}': range fields must be numeric")
        if spec.interval is None:
            raise SchemaLoadError(f"{filename}: field '{spec.key}': range fields need an interval")
        if spec.interval.min > spec.interval.max:
            raise SchemaLoadError(f"{filename}: field '{spec.key}': empty interval")
    if spec.kind is FieldKind.SINGULAR and not spec.legal_values:
        raise SchemaLoadError(f"{filename}: field '{spec.key}': singular fields need a finite value list")
    if (
        spec.kind is FieldKind.ONE_OF_LIST
        and spec.format is FieldFormat.STRING
        and spec.legal_values is None
        and not _OPEN_ID_MARKER.search(spec.explanation)
    ):
        raise SchemaLoadError(
            f"{filename}: field '{spec.key}': string one-of-list fields need legal values "
            "or an explanation marking them as an open identifier set"
        )


def _parse_schema(doc: dict, filename: str) -> Schema:
    name = doc.get("name")
    if name not in SCHEMA_NAMES:
        raise SchemaLoadError(f"{filename}: unknown schema name {name!r}")
    raw_fields = doc.get("fields")
    if not isinstance(raw_fields, list) or not raw_fields:
        raise SchemaLoadError(f"{filename}: schema needs a non-empty 'fields' list")
    fields: dict[str, FieldSpec] = {}
    for fdoc in raw_fields:
        spec = _parse_field(fdoc, filename)
        if spec.key in fields:
            raise SchemaLoadError(f"{filename}: duplicate field key '{spec.key}'")
        fields[spec.key] = spec

    required = {"season", "seasonType", "week"}
    required |= {"nflId"} if name in _PLAYER_SCHEMAS else {"teamId"}
    missing = required - fields.keys()
    if missing:
        raise SchemaLoadError(f"{filename}: schema {name} is missing context fields {sorted(missing)}")
    return Schema(name=name, description=doc.get("description", ""), fields=fields)


class SchemaRegistry:
    """Write-once collection of schemas, safe for concurrent readers."""

    def __init__(self, schemas: list[Schema]):
        self._schemas = {s.name: s for s in schemas}

    @classmethod
    def load(cls, path: str | Path) -> "SchemaRegistry":
        path = Path(path)
        docs = sorted(path.glob("*.json"))
        if not docs:
            raise SchemaLoadError(f"no schema documents found in {path}")
        schemas: list[Schema] = []
        seen: set[str] = set()
        for doc_path in docs:
            try:
                doc = json.loads(doc_path.read_text())
            except json.JSONDecodeError as exc:
                raise SchemaLoadError(f"{doc_path.name}: invalid JSON: {exc}") from exc
            schema = _parse_schema(doc, doc_path.name)
            if schema.name in seen:
                raise SchemaLoadError(f"{doc_path.name}: duplicate schema name {schema.name}")
            seen.add(schema.name)
            schemas.append(schema)
        return cls(schemas)

    def get(self, name: str) -> Schema | None:
        return self._schemas.get(name)

    def names(self) -> list[str]:
        # Canonical declaration order, not file order.
        return [n for n in SCHEMA_NAMES if n in self._schemas]

    def schemas(self) -> list[Schema]:
        return [self._schemas[n] for n in self.names()]

    def validate_filter(self, schema: Schema, field_key: str, clause: FilterClause) -> Violation | None:
        """Return None when the clause is legal for the field, else a Violation.

        Pure function of its inputs; all rejection modes are values.
        """
        spec = schema.fields.get(field_key)
        if spec is None:
            close = difflib.get_close_matches(field_key, schema.fields.keys(), n=1)
            return Violation(
                code="unknown_field",
                field=field_key,
                message=f"unknown field '{field_key}' in schema {schema.name}",
                suggestion=close[0] if close else None,
            )
        if isinstance(clause, RangeClause):
            if spec.kind is not FieldKind.RANGE:
                return Violation("illegal_operator", field_key,
                                 f"range operators are not allowed on {spec.kind.value} field '{field_key}'")
            if not _check_scalar_format(clause.bound, FieldFormat.FLOAT):
                return Violation("illegal_value", field_key,
                                 f"range bound {clause.bound!r} is not numeric")
            assert spec.interval is not None
            if clause.bound < spec.interval.min:
                return Violation("illegal_value", field_key,
                                 f"bound {clause.bound} below interval lower bound {spec.interval.min}")
            if clause.bound > spec.interval.max:
                return Violation("illegal_value", field_key,
                                 f"bound {clause.bound} above interval upper bound {spec.interval.max}")
            return None
        if spec.kind is FieldKind.RANGE:
            return Violation("illegal_operator", field_key,
                             f"field '{field_key}' is a range field; use a range clause")
        values = clause.values if isinstance(clause, InClause) else (clause.value,)
        if isinstance(clause, InClause) and not values:
            return Violation("illegal_value", field_key, "'in' clause needs at least one value")
        for v in values:
            if not _check_scalar_format(v, spec.format):
                return Violation("illegal_value", field_key,
                                 f"value {v!r} does not match format {spec.format.value}")
            if spec.legal_values is not None and v not in spec.legal_values:
                return Violation("illegal_value", field_key,
                                 f"{v!r} not in {list(spec.legal_values)}")
        return None
