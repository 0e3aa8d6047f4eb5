"""Player and team name resolution.

Matching is case-insensitive and exact (full name first, then surname);
no fuzzy matching, so resolution is a pure function of (directory,
session bindings). Names shared by several players come back AMBIGUOUS
and the caller runs a clarification turn.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping

from .errors import DirectoryLoadError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlayerEntry:
    nfl_id: int
    full_name: str
    surname: str
    position: str
    team_id: str
    active_seasons: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "nfl_id": self.nfl_id,
            "full_name": self.full_name,
            "surname": self.surname,
            "position": self.position,
            "team_id": self.team_id,
            "active_seasons": list(self.active_seasons),
        }


@dataclass(frozen=True)
class TeamEntry:
    team_id: str
    name: str
    abbrev: str

    def to_json(self) -> dict:
        return {"team_id": self.team_id, "name": self.name, "abbrev": self.abbrev}


class ResolutionStatus(str, Enum):
    RESOLVED = "RESOLVED"
    AMBIGUOUS = "AMBIGUOUS"
    NOT_FOUND = "NOT_FOUND"


@dataclass(frozen=True)
class ResolutionOutcome:
    status: ResolutionStatus
    resolved_id: int | str | None = None
    candidates: tuple[PlayerEntry, ...] = ()

    @classmethod
    def resolved(cls, entity_id: int | str) -> "ResolutionOutcome":
        return cls(ResolutionStatus.RESOLVED, resolved_id=entity_id)

    @classmethod
    def ambiguous(cls, candidates: tuple[PlayerEntry, ...]) -> "ResolutionOutcome":
        return cls(ResolutionStatus.AMBIGUOUS, candidates=candidates)

    @classmethod
    def not_found(cls) -> "ResolutionOutcome":
        return cls(ResolutionStatus.NOT_FOUND)


def _candidate_order(entry: PlayerEntry) -> tuple:
    # most recently active first; nfl_id breaks ties so order is stable
    return (-max(entry.active_seasons), entry.nfl_id)


class EntityDirectory:
    def __init__(self, players: list[PlayerEntry], teams: list[TeamEntry]):
        self.players = tuple(sorted(players, key=lambda p: p.nfl_id))
        self.teams = tuple(sorted(teams, key=lambda t: t.team_id))
        if not self.players or not self.teams:
            raise DirectoryLoadError("directory needs at least one player and one team")
        self._players_by_id: dict[int, PlayerEntry] = {}
        self._by_full_name: dict[str, list[PlayerEntry]] = {}
        self._by_surname: dict[str, list[PlayerEntry]] = {}
        for p in self.players:
            if p.nfl_id in self._players_by_id:
                raise DirectoryLoadError(f"duplicate nfl_id {p.nfl_id}")
            if p.full_name.split()[-1].casefold() != p.surname.casefold():
                raise DirectoryLoadError(
                    f"player {p.nfl_id}: surname {p.surname!r} is not the "
                    f"final token of {p.full_name!r}")
            if not p.active_seasons:
                raise DirectoryLoadError(f"player {p.nfl_id}: empty active_seasons")
            self._players_by_id[p.nfl_id] = p
            self._by_full_name.setdefault(p.full_name.casefold(), []).append(p)
            self._by_surname.setdefault(p.surname.casefold(), []).append(p)
        self._teams_by_id: dict[str, TeamEntry] = {}
        self._team_lookup: dict[str, TeamEntry] = {}
        for t in self.teams:
            if t.team_id in self._teams_by_id:
                raise DirectoryLoadError(f"duplicate team_id {t.team_id!r}")
            self._teams_by_id[t.team_id] = t
            for alias in (t.name, t.abbrev):
                key = alias.casefold()
                if key in self._team_lookup:
                    raise DirectoryLoadError(f"team alias {alias!r} is not unique")
                self._team_lookup[key] = t
        for bucket in self._by_full_name.values():
            bucket.sort(key=_candidate_order)
        for bucket in self._by_surname.values():
            bucket.sort(key=_candidate_order)

    def player(self, nfl_id: int) -> PlayerEntry | None:
        return self._players_by_id.get(nfl_id)

    def team(self, team_id: str) -> TeamEntry | None:
        return self._teams_by_id.get(team_id)

    def mention_kind(self, text: str) -> str | None:
        """PLAYER / TEAM / None, for span detection during parsing."""
        key = text.casefold()
        if key in self._by_full_name or key in self._by_surname:
            return "PLAYER"
        if key in self._team_lookup:
            return "TEAM"
        return None

    def resolve_player(self, name: str,
                       bindings: Mapping[str, int] | None = None) -> ResolutionOutcome:
        key = name.casefold()
        if bindings and key in bindings:
            bound = bindings[key]
            if bound in self._players_by_id:
                return ResolutionOutcome.resolved(bound)
        candidates = self._by_full_name.get(key) or self._by_surname.get(key) or []
        if len(candidates) == 1:
            return ResolutionOutcome.resolved(candidates[0].nfl_id)
        if len(candidates) >= 2:
            return ResolutionOutcome.ambiguous(tuple(candidates))
        return ResolutionOutcome.not_found()

    def resolve_team(self, name_or_abbrev: str) -> ResolutionOutcome:
        entry = self._team_lookup.get(name_or_abbrev.casefold())
        if entry is None:
            return ResolutionOutcome.not_found()
        return ResolutionOutcome.resolved(entry.team_id)

    def to_json(self) -> dict:
        return {"players": [p.to_json() for p in self.players],
                "teams": [t.to_json() for t in self.teams]}


def load_directory(path: str | Path) -> EntityDirectory:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DirectoryLoadError(f"cannot read directory file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DirectoryLoadError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "players" not in doc or "teams" not in doc:
        raise DirectoryLoadError(f"{path}: expected object with 'players' and 'teams' arrays")
    try:
        players = [PlayerEntry(
            nfl_id=p["nfl_id"], full_name=p["full_name"], surname=p["surname"],
            position=p["position"], team_id=p["team_id"],
            active_seasons=tuple(p["active_seasons"]),
        ) for p in doc["players"]]
        teams = [TeamEntry(team_id=t["team_id"], name=t["name"], abbrev=t["abbrev"])
                 for t in doc["teams"]]
    except (KeyError, TypeError) as exc:
        raise DirectoryLoadError(f"{path}: malformed entry: {exc}") from exc
    directory = EntityDirectory(players, teams)
    log.info("loaded directory: %d players, %d teams", len(directory.players), len(directory.teams))
    return directory
