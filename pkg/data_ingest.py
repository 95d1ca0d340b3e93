"""Readers for the StatsBomb open-data layout and the market-valuation CSVs.

Open-data layout under `data_root`:
    matches/{competition_id}/{season_id}.json   match index per season
    events/{match_id}.json                      event stream per match
    lineups/{match_id}.json                     squads and positions per match

Valuation corpus (`player_valuations.csv`, `players.csv`) follows the public
player-scores dump: one valuation row per player and date, one metadata row
per player.
"""

import json
import math
import unicodedata
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

try:
    from .errors import IngestError
    from .pitch_geometry import DEFAULT_PITCH, BallState
except ImportError:
    from errors import IngestError
    from pitch_geometry import DEFAULT_PITCH, BallState


class EventType(str, Enum):
    """Event kinds the pipeline distinguishes; everything else is OTHER."""

    PASS = "Pass"
    CARRY = "Carry"
    DRIBBLE = "Dribble"
    SHOT = "Shot"
    INTERCEPTION = "Interception"
    CLEARANCE = "Clearance"
    DUEL = "Duel"
    BALL_RECEIPT = "BallReceipt"
    OTHER = "Other"


_SOURCE_KINDS = {
    "Pass": EventType.PASS,
    "Carry": EventType.CARRY,
    "Dribble": EventType.DRIBBLE,
    "Shot": EventType.SHOT,
    "Interception": EventType.INTERCEPTION,
    "Clearance": EventType.CLEARANCE,
    "Duel": EventType.DUEL,
    "Ball Receipt*": EventType.BALL_RECEIPT,
}

# Sub-objects holding the outcome of each kind in the source schema.
_OUTCOME_KEYS = {
    EventType.PASS: "pass",
    EventType.SHOT: "shot",
    EventType.DUEL: "duel",
    EventType.INTERCEPTION: "interception",
    EventType.DRIBBLE: "dribble",
    EventType.BALL_RECEIPT: "ball_receipt",
}


class PositionGroup(str, Enum):
    DEFENDER = "Defender"
    MIDFIELDER = "Midfielder"
    STRIKER = "Striker"
    GOALKEEPER = "Goalkeeper"


# Checked in order; the first group whose token occurs in the raw position wins.
POSITION_TABLE: List[Tuple[PositionGroup, Tuple[str, ...]]] = [
    (PositionGroup.GOALKEEPER, ("Goalkeeper",)),
    (PositionGroup.DEFENDER, ("Back", "Defender")),
    (PositionGroup.MIDFIELDER, ("Midfield",)),
    (PositionGroup.STRIKER, ("Forward", "Wing", "Striker", "Attack")),
]


def position_group_for(raw_position: Optional[str]) -> Optional[PositionGroup]:
    """Map a raw position label ("Left Back", "Centre-Forward", ...) to its group."""
    if not raw_position:
        return None
    for group, tokens in POSITION_TABLE:
        if any(token in raw_position for token in tokens):
            return group
    return None


@dataclass(frozen=True)
class ShotDetail:
    technique: str
    body_part: str
    shot_type: str
    is_goal: bool


@dataclass(frozen=True)
class Event:
    """One normalized in-match action record."""

    match_id: int
    event_index: int
    period: int
    team_id: int
    player_id: Optional[int]
    event_type: EventType
    kind: str
    location: Optional[BallState]
    timestamp: float
    duration: float
    under_pressure: bool
    play_pattern: str
    possession_id: int
    outcome: Optional[str] = None
    shot_detail: Optional[ShotDetail] = None
    player_name: Optional[str] = None
    team_name: Optional[str] = None
    end_location: Optional[BallState] = None

    @property
    def is_on_ball_action(self) -> bool:
        return self.event_type in ON_BALL_TYPES

    def to_record(self) -> Dict[str, Any]:
        record = asdict(self)
        record["event_type"] = self.event_type.value
        record["location"] = list(self.location.as_tuple()) if self.location else None
        record["end_location"] = list(self.end_location.as_tuple()) if self.end_location else None
        return record

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "Event":
        shot = record.get("shot_detail")
        location = record.get("location")
        end_location = record.get("end_location")
        return cls(
            match_id=record["match_id"],
            event_index=record["event_index"],
            period=record["period"],
            team_id=record["team_id"],
            player_id=record.get("player_id"),
            event_type=EventType(record["event_type"]),
            kind=record["kind"],
            location=BallState(*location) if location else None,
            timestamp=record["timestamp"],
            duration=record["duration"],
            under_pressure=record["under_pressure"],
            play_pattern=record["play_pattern"],
            possession_id=record["possession_id"],
            outcome=record.get("outcome"),
            shot_detail=ShotDetail(**shot) if shot else None,
            player_name=record.get("player_name"),
            team_name=record.get("team_name"),
            end_location=BallState(*end_location) if end_location else None,
        )


ON_BALL_TYPES = frozenset({EventType.PASS, EventType.CARRY, EventType.DRIBBLE, EventType.SHOT})


@dataclass(frozen=True)
class ValuationRecord:
    player_id: int
    date: date
    market_value_eur: int


@dataclass(frozen=True)
class PlayerMeta:
    player_id: int
    name: str
    birth_date: Optional[date]
    position_group: Optional[PositionGroup]
    raw_position: str


@dataclass(frozen=True)
class MatchInfo:
    match_id: int
    competition_id: int
    season_id: int
    match_date: date
    home_team: str
    away_team: str
    competition_stage: str


@dataclass
class PlayerProfile:
    """A StatsBomb player as seen across the lineups of the selected matches."""

    player_id: int
    name: str
    nickname: Optional[str]
    team_id: int
    team_name: str
    raw_position: Optional[str]
    position_group: Optional[PositionGroup]
    matches_played: List[int] = field(default_factory=list)

    @property
    def games_played(self) -> int:
        return len(self.matches_played)

    @property
    def display_name(self) -> str:
        return self.nickname or self.name

    def to_record(self) -> Dict[str, Any]:
        record = asdict(self)
        record["position_group"] = self.position_group.value if self.position_group else None
        return record

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "PlayerProfile":
        group = record.get("position_group")
        return cls(
            player_id=record["player_id"],
            name=record["name"],
            nickname=record.get("nickname"),
            team_id=record["team_id"],
            team_name=record["team_name"],
            raw_position=record.get("raw_position"),
            position_group=PositionGroup(group) if group else None,
            matches_played=list(record.get("matches_played", [])),
        )


@dataclass
class SkippedRecord:
    source: str
    record_id: str
    reason: str


@dataclass
class IngestReport:
    """Record-level problems collected while loading; nothing here is fatal."""

    skipped: List[SkippedRecord] = field(default_factory=list)
    raw_shot_rows: int = 0
    parsed_shots: int = 0
    skipped_shots: int = 0
    csv_warnings: int = 0

    def skip(self, source: str, record_id: Any, reason: str, is_shot: bool = False):
        self.skipped.append(SkippedRecord(source, str(record_id), reason))
        if is_shot:
            self.skipped_shots += 1

    def merge(self, other: "IngestReport"):
        self.skipped.extend(other.skipped)
        self.raw_shot_rows += other.raw_shot_rows
        self.parsed_shots += other.parsed_shots
        self.skipped_shots += other.skipped_shots
        self.csv_warnings += other.csv_warnings

    def to_dict(self) -> Dict[str, Any]:
        return {
            "raw_shot_rows": self.raw_shot_rows,
            "parsed_shots": self.parsed_shots,
            "skipped_shots": self.skipped_shots,
            "csv_warnings": self.csv_warnings,
            "skipped": [asdict(s) for s in self.skipped],
        }


def _read_json(path: Path) -> Any:
    """Parse a JSON file, reporting the byte offset of any syntax error."""
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise IngestError(f"file not found: {path}", {"path": str(path)}) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[:e.pos].encode("utf-8"))
        raise IngestError(
            f"{path}: invalid JSON at byte offset {offset} ({e.msg})",
            {"path": str(path), "byte_offset": offset},
        ) from e


def _check_layout(data_root: Path):
    missing = [name for name in ("matches", "events") if not (data_root / name).is_dir()]
    if missing:
        raise IngestError(
            f"open-data root {data_root} is missing directories: {', '.join(missing)}",
            {"data_root": str(data_root), "missing": missing},
        )


def load_match_index(data_root, competition_filter: Sequence[Tuple[int, int]]) -> List[MatchInfo]:
    """Match metadata for the selected (competition_id, season_id) pairs, by match id."""
    data_root = Path(data_root)
    _check_layout(data_root)

    matches: Dict[int, MatchInfo] = {}
    for competition_id, season_id in competition_filter:
        index_path = data_root / "matches" / str(competition_id) / f"{season_id}.json"
        if not index_path.is_file():
            raise IngestError(
                f"competition index not found: {competition_id}/{season_id}",
                {"path": str(index_path)},
            )
        entries = _read_json(index_path)
        if not isinstance(entries, list):
            raise IngestError(f"{index_path}: expected a list of matches", {"path": str(index_path)})
        for entry in entries:
            try:
                match_id = int(entry["match_id"])
                matches[match_id] = MatchInfo(
                    match_id=match_id,
                    competition_id=competition_id,
                    season_id=season_id,
                    match_date=date.fromisoformat(entry["match_date"]),
                    home_team=entry["home_team"]["home_team_name"],
                    away_team=entry["away_team"]["away_team_name"],
                    competition_stage=(entry.get("competition_stage") or {}).get("name", ""),
                )
            except (KeyError, TypeError, ValueError) as e:
                raise IngestError(
                    f"{index_path}: malformed match entry ({e})", {"path": str(index_path)}
                ) from e

    logger.info(f"📥 Match index: {len(matches)} matches in {len(competition_filter)} competition(s)")
    return [matches[m] for m in sorted(matches)]


def load_matches(data_root, competition_filter: Sequence[Tuple[int, int]]) -> List[int]:
    """Match ids of the selected competitions in ascending order."""
    return [m.match_id for m in load_match_index(data_root, competition_filter)]


def _parse_timestamp(raw: str) -> float:
    hours, minutes, seconds = raw.split(":")
    return int(hours) * 3600 + int(minutes) * 60 + float(seconds)


def _name(obj: Any) -> Optional[str]:
    return obj.get("name") if isinstance(obj, dict) else None


def _state(raw: Any) -> Optional[BallState]:
    if not isinstance(raw, list) or len(raw) < 2:
        return None
    return BallState(float(raw[0]), float(raw[1]))


def _parse_event(raw: Dict[str, Any], match_id: int, event_index: int, report: IngestReport) -> Optional[Event]:
    kind = _name(raw.get("type")) or ""
    event_type = _SOURCE_KINDS.get(kind, EventType.OTHER)
    is_shot = event_type is EventType.SHOT
    record_id = raw.get("id", f"{match_id}#{event_index}")
    source = f"events/{match_id}.json"

    try:
        team = raw["team"]
        period = int(raw["period"])
        timestamp = _parse_timestamp(raw["timestamp"])
        possession_id = int(raw["possession"])
    except (KeyError, TypeError, ValueError) as e:
        report.skip(source, record_id, f"missing or malformed field: {e}", is_shot)
        return None

    location = _state(raw.get("location"))
    boundary = False
    if location is not None and not DEFAULT_PITCH.contains(location):
        report.skip(source, record_id, f"location {location.as_tuple()} outside the pitch", is_shot)
        if not is_shot:
            return None
        location, boundary = None, True

    detail_key = _OUTCOME_KEYS.get(event_type)
    detail = raw.get(detail_key, {}) if detail_key else {}
    outcome = _name(detail.get("outcome")) if isinstance(detail, dict) else None

    shot_detail = None
    if is_shot and not boundary:
        technique = _name(detail.get("technique"))
        body_part = _name(detail.get("body_part"))
        shot_type = _name(detail.get("type"))
        missing = [n for n, v in (("technique", technique), ("body_part", body_part), ("type", shot_type)) if not v]
        if missing:
            report.skip(source, record_id, f"shot missing {', '.join(missing)}", True)
            location = None
        else:
            shot_detail = ShotDetail(technique, body_part, shot_type, outcome == "Goal")

    end_location = None
    for key in ("pass", "carry", "shot"):
        candidate = _state((raw.get(key) or {}).get("end_location"))
        if candidate is not None and DEFAULT_PITCH.contains(candidate):
            end_location = candidate
            break

    player = raw.get("player") or {}
    return Event(
        match_id=match_id,
        event_index=event_index,
        period=period,
        team_id=int(team["id"]),
        player_id=int(player["id"]) if "id" in player else None,
        event_type=event_type,
        kind=kind,
        location=location,
        timestamp=timestamp,
        duration=float(raw.get("duration") or 0.0),
        under_pressure=bool(raw.get("under_pressure", False)),
        play_pattern=(_name(raw.get("play_pattern")) or "Unknown").lower(),
        possession_id=possession_id,
        outcome=outcome,
        shot_detail=shot_detail,
        player_name=player.get("name"),
        team_name=team.get("name"),
        end_location=end_location,
    )


def load_events(data_root, match_id: int, report: Optional[IngestReport] = None) -> List[Event]:
    """Normalized events of one match in file order.

    Record-level problems (shots without technique/body part/type, locations
    off the pitch) are collected in `report`. A skipped shot stays in the
    stream without location or detail so chain segmentation still ends there.
    """
    report = report if report is not None else IngestReport()
    path = Path(data_root) / "events" / f"{match_id}.json"
    raw_events = _read_json(path)
    if not isinstance(raw_events, list):
        raise IngestError(f"{path}: expected a list of events", {"path": str(path)})

    events: List[Event] = []
    for raw in raw_events:
        if _name(raw.get("type")) == "Shot":
            report.raw_shot_rows += 1
        event = _parse_event(raw, match_id, len(events), report)
        if event is None:
            continue
        if event.event_type is EventType.SHOT and event.shot_detail is not None:
            report.parsed_shots += 1
        events.append(event)
    return events


def load_all_events(data_root, match_ids: Iterable[int], report: Optional[IngestReport] = None,
                    jobs: int = 1) -> Dict[int, List[Event]]:
    """Parse several matches, optionally in parallel; merged by match id."""
    report = report if report is not None else IngestReport()
    match_ids = sorted(match_ids)

    def _one(match_id: int):
        local = IngestReport()
        return match_id, load_events(data_root, match_id, local), local

    results = Parallel(n_jobs=jobs, prefer="threads")(delayed(_one)(m) for m in match_ids)
    events_by_match: Dict[int, List[Event]] = {}
    for match_id, events, local in sorted(results, key=lambda r: r[0]):
        events_by_match[match_id] = events
        report.merge(local)

    logger.info(f"📥 Parsed {sum(len(e) for e in events_by_match.values())} events from {len(match_ids)} matches")
    if report.skipped:
        logger.warning(f"   ✗ {len(report.skipped)} records skipped ({report.skipped_shots} shots)")
    return events_by_match


def load_lineups(data_root, match_id: int) -> List[Dict[str, Any]]:
    """Raw lineup entries of one match: one dict per team."""
    path = Path(data_root) / "lineups" / f"{match_id}.json"
    lineups = _read_json(path)
    if not isinstance(lineups, list):
        raise IngestError(f"{path}: expected a list of teams", {"path": str(path)})
    return lineups


def _mode(values: List[str]) -> Optional[str]:
    """Most frequent value; ties broken alphabetically."""
    if not values:
        return None
    counts = Counter(values)
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))[0][0]


def build_player_directory(data_root, match_ids: Iterable[int]) -> Dict[int, PlayerProfile]:
    """Players of the selected matches with modal position and matches played."""
    starts: Dict[int, List[str]] = {}
    any_positions: Dict[int, List[str]] = {}
    teams: Dict[int, List[Tuple[int, str]]] = {}
    names: Dict[int, Tuple[str, Optional[str]]] = {}
    played: Dict[int, List[int]] = {}

    for match_id in sorted(match_ids):
        for team in load_lineups(data_root, match_id):
            for entry in team.get("lineup", []):
                player_id = int(entry["player_id"])
                names[player_id] = (entry["player_name"], entry.get("player_nickname"))
                teams.setdefault(player_id, []).append((int(team["team_id"]), team["team_name"]))
                positions = entry.get("positions") or []
                if not positions:
                    continue
                played.setdefault(player_id, []).append(match_id)
                any_positions.setdefault(player_id, []).append(positions[0]["position"])
                for position in positions:
                    if position.get("start_reason") == "Starting XI":
                        starts.setdefault(player_id, []).append(position["position"])

    directory: Dict[int, PlayerProfile] = {}
    for player_id in sorted(names):
        team_id, team_name = sorted(Counter(teams[player_id]).items(), key=lambda i: (-i[1], i[0]))[0][0]
        raw_position = _mode(starts.get(player_id, [])) or _mode(any_positions.get(player_id, []))
        name, nickname = names[player_id]
        directory[player_id] = PlayerProfile(
            player_id=player_id,
            name=name,
            nickname=nickname,
            team_id=team_id,
            team_name=team_name,
            raw_position=raw_position,
            position_group=position_group_for(raw_position),
            matches_played=sorted(set(played.get(player_id, []))),
        )

    logger.info(f"📥 Player directory: {len(directory)} players, "
                f"{sum(1 for p in directory.values() if p.games_played)} with minutes")
    return directory


def _read_csv(csv_path) -> pd.DataFrame:
    path = Path(csv_path)
    if not path.is_file():
        raise IngestError(f"file not found: {path}", {"path": str(path)})
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        return pd.DataFrame()


def _pick_column(frame: pd.DataFrame, candidates: Sequence[str], path) -> str:
    for name in candidates:
        if name in frame.columns:
            return name
    raise IngestError(
        f"{path}: none of the columns {list(candidates)} present",
        {"path": str(path), "columns": list(frame.columns)},
    )


def _parse_date(raw: str) -> Optional[date]:
    raw = raw.strip()
    if not raw:
        return None
    try:
        return datetime.fromisoformat(raw).date()
    except ValueError:
        return None


def load_valuations(csv_path, report: Optional[IngestReport] = None) -> Dict[int, List[ValuationRecord]]:
    """Market-value series per player, sorted by date.

    Duplicate (player, date) rows keep the last one in file order. Rows whose
    value is not a finite non-negative number are dropped and counted as warnings.
    """
    report = report if report is not None else IngestReport()
    frame = _read_csv(csv_path)
    if frame.empty:
        return {}

    id_col = _pick_column(frame, ("player_id",), csv_path)
    date_col = _pick_column(frame, ("date", "datetime"), csv_path)
    value_col = _pick_column(frame, ("market_value_in_eur", "market_value"), csv_path)

    series: Dict[int, Dict[date, ValuationRecord]] = {}
    for row_number, (raw_id, raw_date, raw_value) in enumerate(
            zip(frame[id_col], frame[date_col], frame[value_col]), start=2):
        try:
            player_id = int(raw_id)
            value = float(raw_value)
        except ValueError:
            report.csv_warnings += 1
            report.skip(str(csv_path), row_number, f"non-numeric value {raw_value!r}")
            continue
        when = _parse_date(raw_date)
        if when is None or not math.isfinite(value) or value < 0:
            report.csv_warnings += 1
            report.skip(str(csv_path), row_number, f"unusable row ({raw_date!r}, {raw_value!r})")
            continue
        series.setdefault(player_id, {})[when] = ValuationRecord(player_id, when, int(round(value)))

    if report.csv_warnings:
        logger.warning(f"📥 {csv_path}: {report.csv_warnings} valuation rows skipped")
    return {pid: [by_date[d] for d in sorted(by_date)] for pid, by_date in sorted(series.items())}


def load_player_meta(csv_path, report: Optional[IngestReport] = None) -> Dict[int, PlayerMeta]:
    """Player demographics keyed by valuation-corpus player id."""
    report = report if report is not None else IngestReport()
    frame = _read_csv(csv_path)
    if frame.empty:
        return {}

    meta: Dict[int, PlayerMeta] = {}
    for row_number, row in enumerate(frame.to_dict("records"), start=2):
        try:
            player_id = int(row["player_id"])
        except (KeyError, ValueError):
            report.csv_warnings += 1
            report.skip(str(csv_path), row_number, "player_id missing or non-numeric")
            continue
        name = row.get("name") or f"{row.get('first_name', '')} {row.get('last_name', '')}".strip()
        raw_position = row.get("sub_position") or row.get("position") or ""
        meta[player_id] = PlayerMeta(
            player_id=player_id,
            name=name,
            birth_date=_parse_date(row.get("date_of_birth", "")),
            position_group=position_group_for(raw_position),
            raw_position=raw_position,
        )
    return dict(sorted(meta.items()))


def normalize_name(name: str) -> str:
    """Case-folded, diacritic-free, whitespace-collapsed form of a player name."""
    decomposed = unicodedata.normalize("NFKD", name)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return " ".join(stripped.casefold().split())


@dataclass
class UnmatchedPlayer:
    player_id: int
    names: List[str]
    reason: str
    candidates: List[int] = field(default_factory=list)


@dataclass
class LinkReport:
    linked: int = 0
    overridden: int = 0
    unmatched: List[UnmatchedPlayer] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "linked": self.linked,
            "overridden": self.overridden,
            "unmatched": [asdict(u) for u in self.unmatched],
        }


def load_link_overrides(path) -> Dict[int, int]:
    """Manual links from a JSON object {statsbomb_id: valuation_id}."""
    raw = _read_json(Path(path))
    if not isinstance(raw, dict):
        raise IngestError(f"{path}: expected an object of player id pairs", {"path": str(path)})
    try:
        return {int(k): int(v) for k, v in raw.items()}
    except (TypeError, ValueError) as e:
        raise IngestError(f"{path}: non-integer player id ({e})", {"path": str(path)}) from e


def link_players(statsbomb_names: Dict[int, Sequence[str]], meta: Dict[int, PlayerMeta],
                 overrides: Optional[Dict[int, int]] = None,
                 report: Optional[LinkReport] = None) -> Dict[int, int]:
    """Resolve StatsBomb player ids to valuation-corpus ids by exact normalized name.

    Every known name of a player (full name, nickname) is tried; the link is
    made only when they point at exactly one valuation player. Manual
    overrides win. Ambiguous and missing names are reported, never guessed.
    """
    report = report if report is not None else LinkReport()
    overrides = overrides or {}

    index: Dict[str, List[int]] = {}
    for player_id, player in meta.items():
        index.setdefault(normalize_name(player.name), []).append(player_id)

    links: Dict[int, int] = {}
    for sb_id in sorted(statsbomb_names):
        names = [n for n in statsbomb_names[sb_id] if n]
        if sb_id in overrides:
            target = overrides[sb_id]
            if target in meta:
                links[sb_id] = target
                report.overridden += 1
                continue
            report.unmatched.append(UnmatchedPlayer(sb_id, names, "override_target_unknown", [target]))
            continue

        candidates = sorted({pid for n in names for pid in index.get(normalize_name(n), [])})
        if len(candidates) == 1:
            links[sb_id] = candidates[0]
        elif not candidates:
            report.unmatched.append(UnmatchedPlayer(sb_id, names, "not_found"))
        else:
            report.unmatched.append(UnmatchedPlayer(sb_id, names, "ambiguous", candidates))

    report.linked = len(links)
    logger.info(f"🔗 Linked {len(links)}/{len(statsbomb_names)} players "
                f"({report.overridden} by override, {len(report.unmatched)} unmatched)")
    return links
