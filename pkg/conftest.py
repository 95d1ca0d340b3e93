"""Shared pytest fixtures: synthetic events, chains and a miniature open-data checkout."""

import csv
import json
import sys
from pathlib import Path
from typing import List, Optional

import pytest
from loguru import logger

from chain_builder import Action, PossessionChain
from data_ingest import Event, EventType, ShotDetail
from pitch_geometry import BallState


@pytest.fixture(autouse=True)
def _reset_logging():
    yield
    logger.remove()
    logger.add(sys.stderr, level="WARNING")


def make_event(index: int, event_type: EventType, team_id: int = 1, player_id: Optional[int] = 10,
               location=(50.0, 40.0), possession_id: int = 1, period: int = 1, match_id: int = 1,
               outcome: Optional[str] = None, shot_detail: Optional[ShotDetail] = None,
               duration: float = 1.0, under_pressure: bool = False, play_pattern: str = "regular play") -> Event:
    return Event(
        match_id=match_id,
        event_index=index,
        period=period,
        team_id=team_id,
        player_id=player_id,
        event_type=event_type,
        kind=event_type.value,
        location=BallState(*location) if location is not None else None,
        timestamp=float(index),
        duration=duration,
        under_pressure=under_pressure,
        play_pattern=play_pattern,
        possession_id=possession_id,
        outcome=outcome,
        shot_detail=shot_detail,
    )


def make_chain(steps, scored: bool = False, match_id: int = 1, chain_id: int = 1, team_id: int = 1,
               shot_detail: Optional[ShotDetail] = None) -> PossessionChain:
    """Chain from (event_type, player_id, x, y[, duration]) steps; the last step is the shot."""
    events = []
    for i, step in enumerate(steps):
        event_type, player_id, x, y = step[:4]
        duration = step[4] if len(step) > 4 else 1.0
        detail = None
        if event_type is EventType.SHOT:
            detail = shot_detail or ShotDetail("Normal", "Right Foot", "Open Play", scored)
        events.append(make_event(i, event_type, team_id, player_id, (x, y), match_id=match_id,
                                 shot_detail=detail, duration=duration))
    actions = [
        Action(e, k, e.location, events[k].location if k < len(events) else e.location)
        for k, e in enumerate(events, start=1)
    ]
    return PossessionChain(chain_id, match_id, team_id, actions, scored)


@pytest.fixture
def event_factory():
    return make_event


@pytest.fixture
def chain_factory():
    return make_chain


def reference_chains(events: List[Event]) -> List[List[int]]:
    """Event indices of every chain, found by walking back from each usable shot."""
    on_ball = (EventType.PASS, EventType.CARRY, EventType.DRIBBLE)
    duel_won = ("Won", "Success", "Success In Play", "Success Out")
    result = []
    for i, shot in enumerate(events):
        if shot.event_type is not EventType.SHOT or shot.location is None or shot.shot_detail is None:
            continue
        run = [shot.event_index]
        for prev in reversed(events[:i]):
            if prev.possession_id != shot.possession_id or prev.period != shot.period:
                break
            if prev.event_type is EventType.SHOT:
                break
            if prev.team_id != shot.team_id:
                if prev.event_type in on_ball + (EventType.INTERCEPTION, EventType.CLEARANCE):
                    break
                if prev.event_type is EventType.DUEL and prev.outcome in duel_won:
                    break
                continue
            if prev.event_type in on_ball and prev.location is not None:
                run.append(prev.event_index)
        result.append(list(reversed(run)))
    return result


@pytest.fixture
def reference_segmenter():
    return reference_chains


# Miniature open-data checkout: Italy v Denmark four times, 40 possessions per match.

TEAMS = {1: "Italy", 2: "Denmark"}
POSITIONS = [
    "Goalkeeper", "Left Back", "Left Center Back", "Right Center Back", "Right Back",
    "Center Defensive Midfield", "Left Center Midfield", "Right Center Midfield",
    "Left Wing", "Center Forward", "Right Wing",
]
SUB_POSITIONS = [
    "Goalkeeper", "Left-Back", "Centre-Back", "Centre-Back", "Right-Back",
    "Defensive Midfield", "Central Midfield", "Central Midfield",
    "Left Winger", "Centre-Forward", "Right Winger",
]
MATCH_DATES = ["2021-06-11", "2021-06-20", "2021-07-02", "2021-07-11"]


def player_name(team_id: int, slot: int) -> str:
    if team_id == 1 and slot == 5:
        return "Jorge Luiz Frello Filho"
    return f"{TEAMS[team_id]} Player {slot:02d}"


def player_id_of(team_id: int, slot: int) -> int:
    return team_id * 100 + slot


def _raw_event(index, kind, team_id, slot, possession, period, location=None, **extra):
    raw = {
        "id": f"e{index}",
        "index": index,
        "period": period,
        "timestamp": f"00:{(index // 60) % 60:02d}:{index % 60:02d}.000",
        "type": {"name": kind},
        "possession": possession,
        "play_pattern": {"name": "Regular Play" if possession % 3 else "From Corner"},
        "team": {"id": team_id, "name": TEAMS[team_id]},
        "duration": 1.5,
    }
    if slot is not None:
        raw["player"] = {"id": player_id_of(team_id, slot), "name": player_name(team_id, slot)}
    if location is not None:
        raw["location"] = list(location)
    raw.update(extra)
    return raw


def synthetic_match_events(possessions: int = 40) -> List[dict]:
    events = [
        _raw_event(0, "Starting XI", 1, None, 1, 1),
        _raw_event(1, "Starting XI", 2, None, 1, 1),
    ]
    for p in range(1, possessions + 1):
        team = 1 if p % 2 else 2
        opponent = 3 - team
        period = 1 if p <= possessions // 2 else 2
        defender = 1 + p % 4
        midfielder = 5 + p % 3
        striker = 8 + p % 3
        shooter = 8 + (p + 1) % 3
        goal = p % 5 == 0
        y0 = 20.0 + (p * 7) % 40

        def add(kind, t, slot, location=None, **extra):
            events.append(_raw_event(len(events), kind, t, slot, p, period, location, **extra))

        add("Pass", team, defender, (30.0, y0), **{"pass": {"end_location": [50.0, y0]}})
        add("Ball Receipt*", team, midfielder, (50.0, y0))
        add("Carry", team, midfielder, (50.0, y0), carry={"end_location": [60.0, y0]})
        add("Pressure", opponent, 2, (60.0, 80.0 - y0))
        if p % 4 == 0:
            add("Duel", opponent, 3, (60.0, y0), duel={"outcome": {"name": "Lost In Play"}})
        add("Pass", team, midfielder, (60.0, y0), under_pressure=True, **{"pass": {"end_location": [85.0, 40.0]}})
        add("Pass", team, striker, (85.0 if goal else 70.0, 40.0), **{"pass": {"end_location": [100.0, 40.0]}})
        shot_location = (112.0, 40.0) if goal else (96.0, 10.0 + (p * 13) % 60)
        add("Shot", team, shooter, shot_location, shot={
            "outcome": {"name": "Goal" if goal else "Saved"},
            "technique": {"name": "Normal"},
            "body_part": {"name": "Right Foot" if p % 2 else "Left Foot"},
            "type": {"name": "Open Play"},
            "end_location": [120.0, 40.0],
        })
    return events


def synthetic_lineups() -> List[dict]:
    return [
        {
            "team_id": team_id,
            "team_name": name,
            "lineup": [
                {
                    "player_id": player_id_of(team_id, slot),
                    "player_name": player_name(team_id, slot),
                    "player_nickname": "Jorginho" if (team_id, slot) == (1, 5) else None,
                    "positions": [{"position": POSITIONS[slot], "start_reason": "Starting XI"}],
                }
                for slot in range(11)
            ],
        }
        for team_id, name in TEAMS.items()
    ]


def write_open_data(root: Path, n_matches: int = 4) -> Path:
    (root / "matches" / "55").mkdir(parents=True)
    (root / "events").mkdir()
    (root / "lineups").mkdir()
    index = []
    for m in range(n_matches):
        match_id = 3000 + m
        index.append({
            "match_id": match_id,
            "match_date": MATCH_DATES[m % len(MATCH_DATES)],
            "home_team": {"home_team_name": "Italy"},
            "away_team": {"away_team_name": "Denmark"},
            "competition_stage": {"name": "Group Stage"},
        })
        (root / "events" / f"{match_id}.json").write_text(json.dumps(synthetic_match_events()))
        (root / "lineups" / f"{match_id}.json").write_text(json.dumps(synthetic_lineups()))
    (root / "matches" / "55" / "43.json").write_text(json.dumps(index))
    return root


def write_valuation_corpus(root: Path) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    with (root / "players.csv").open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["player_id", "name", "date_of_birth", "sub_position", "position"])
        for team_id in TEAMS:
            for slot in range(11):
                name = "Jorginho" if (team_id, slot) == (1, 5) else player_name(team_id, slot)
                writer.writerow([9000 + player_id_of(team_id, slot), name,
                                 f"{1990 + slot % 8}-0{1 + slot % 9}-15 00:00:00",
                                 SUB_POSITIONS[slot], ""])
    with (root / "player_valuations.csv").open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["player_id", "date", "market_value_in_eur"])
        for team_id in TEAMS:
            for slot in range(11):
                pid = 9000 + player_id_of(team_id, slot)
                before = 5_000_000 + slot * 1_000_000
                change = (1 if (slot + team_id) % 2 else -1) * (500_000 + slot * 250_000)
                writer.writerow([pid, "2021-03-01", before])
                writer.writerow([pid, "2021-09-01", before + change])
    return root


@pytest.fixture
def open_data_root(tmp_path) -> Path:
    return write_open_data(tmp_path / "open-data")


@pytest.fixture
def valuation_dir(tmp_path) -> Path:
    return write_valuation_corpus(tmp_path / "player-scores")
