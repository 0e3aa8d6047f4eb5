"""Synthetic play dataset generator.

All randomness comes from one `random.Random(seed)` so the same seed always
yields the same bytes on disk. Marginals (documented in the README): 60%
pass / 35% rush / 5% other; 5% touchdowns; 3% of passes intercepted
(interceptions and touchdowns never co-occur, and an intercepted pass has
0.0 pass yards); 85% regular season over weeks 1-18, 15% postseason over
weeks 19-22.
"""

from __future__ import annotations

import random
from typing import Sequence

from .directory import EntityDirectory, PlayerEntry
from .store import FORMATIONS, Alignment, PlayRecord

_FORMATION_WEIGHTS = (25, 55, 12, 8)  # matches FORMATIONS order


def _pick_actor(rng: random.Random, players: Sequence[PlayerEntry],
                team_id: str, season: int, positions: tuple[str, ...]) -> int:
    pool = [p for p in players
            if p.team_id == team_id and p.position in positions and season in p.active_seasons]
    if not pool:
        # a roster hole in the directory; fall back to any of the team's players
        pool = [p for p in players if p.team_id == team_id]
    return rng.choice(pool).nfl_id


def generate_synthetic(directory: EntityDirectory, count: int, seed: int) -> list[PlayRecord]:
    rng = random.Random(seed)
    players = directory.players
    team_ids = [t.team_id for t in directory.teams]
    records: list[PlayRecord] = []
    for i in range(count):
        season = rng.randint(2016, 2024)
        if rng.random() < 0.85:
            season_type, week = "REG", rng.randint(1, 18)
        else:
            season_type, week = "POST", rng.randint(19, 22)
        offense, defense = rng.sample(team_ids, 2)
        game_id = f"g{season}-{offense}-{defense}-w{week:02d}"

        roll = rng.random()
        play_type = "PASS" if roll < 0.60 else ("RUSH" if roll < 0.95 else "OTHER")
        touchdown = 1 if rng.random() < 0.05 else 0
        interception = 0
        pass_yards: float | None = None
        rush_yards: float | None = None

        if play_type == "PASS":
            actor = _pick_actor(rng, players, offense, season, ("QB",))
            if touchdown:
                pass_yards = float(rng.randint(1, 60))
            elif rng.random() < 0.03:
                interception = 1
                pass_yards = 0.0
            else:
                pass_yards = round(max(0.0, rng.gauss(7.0, 9.0)), 1)
        elif play_type == "RUSH":
            actor = _pick_actor(rng, players, offense, season, ("RB", "QB"))
            rush_yards = float(rng.randint(1, 40)) if touchdown else round(max(0.0, rng.gauss(4.2, 4.0)), 1)
        else:
            actor = _pick_actor(rng, players, offense, season, ("QB", "RB", "WR"))
            touchdown = 0

        formation = rng.choices(FORMATIONS, weights=_FORMATION_WEIGHTS)[0]

        defender_pool = [p.nfl_id for p in players if p.team_id == defense]
        n_defenders = min(rng.randint(3, 5), len(defender_pool))
        defender_ids = tuple(sorted(rng.sample(defender_pool, n_defenders)))
        alignment = {
            did: Alignment(edge=1 if rng.random() < 0.25 else 0,
                           direction=rng.choice(("LEFT", "RIGHT")))
            for did in defender_ids
        }

        records.append(PlayRecord(
            play_id=f"play-{i:06d}",
            game_id=game_id,
            season=season,
            season_type=season_type,
            week=week,
            play_type=play_type,
            offense_team_id=offense,
            defense_team_id=defense,
            actor_nfl_id=actor,
            touchdown=touchdown,
            interception=interception,
            formation=formation,
            pass_yards=pass_yards,
            rush_yards=rush_yards,
            defender_ids=defender_ids,
            defender_alignment=alignment,
        ))
    return records
