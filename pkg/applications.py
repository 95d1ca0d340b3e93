"""Player valuation report and best-per-position team selection."""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

from loguru import logger

try:
    from .data_ingest import PlayerProfile, PositionGroup, normalize_name
    from .errors import SelectionError
    from .ml_core import ModelArtifact
    from .transfer_model import TransferRow, predict_fee_changes
    from .valuation_engine import PlayerScore
except ImportError:
    from data_ingest import PlayerProfile, PositionGroup, normalize_name
    from errors import SelectionError
    from ml_core import ModelArtifact
    from transfer_model import TransferRow, predict_fee_changes
    from valuation_engine import PlayerScore


# Outfield 4-3-3; keepers cannot be scored so there is no goalkeeper slot.
FORMATION = {
    PositionGroup.DEFENDER: 4,
    PositionGroup.MIDFIELDER: 3,
    PositionGroup.STRIKER: 3,
}
UNLINKED = "unlinked"
# Linked to a valuation series but dropped by the transfer-row filters.
EXCLUDED = "excluded"


@dataclass(frozen=True)
class TeamMember:
    player_id: int
    name: str
    team: str
    position_group: PositionGroup
    normalized_score: float
    games_played: int

    def to_record(self) -> Dict[str, Any]:
        record = asdict(self)
        record["position_group"] = self.position_group.value
        return record


@dataclass
class SymbolicTeam:
    members: List[TeamMember]
    min_games: int

    @property
    def formation(self) -> Dict[str, int]:
        return {group.value: count for group, count in FORMATION.items()}

    def by_group(self, group: PositionGroup) -> List[TeamMember]:
        return [m for m in self.members if m.position_group is group]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "formation": self.formation,
            "min_games": self.min_games,
            "members": [m.to_record() for m in self.members],
        }

    def to_markdown(self) -> str:
        lines = ["| Position | Player | Team | Score/game | Games |", "|---|---|---|---|---|"]
        for member in self.members:
            lines.append(f"| {member.position_group.value} | {member.name} | {member.team} | "
                         f"{member.normalized_score:.4f} | {member.games_played} |")
        return "\n".join(lines) + "\n"


def check_team_allowlist(team_allowlist: Optional[Sequence[str]], known_teams: Iterable[str]) -> List[str]:
    """Allowlist names that match no team of the ingested matches.

    Unknown names are logged; SelectionError if no name matches.
    """
    if not team_allowlist:
        return []
    known = set(known_teams)
    unknown = [name for name in team_allowlist if name not in known]
    if len(unknown) == len(team_allowlist):
        raise SelectionError("no allowlisted team appears in the ingested matches",
                             {"unknown": unknown, "known": sorted(known)})
    if unknown:
        logger.warning(f"   ✗ allowlisted teams not in the ingested matches: {', '.join(unknown)}")
    return unknown


def select_symbolic_team(scores: Sequence[PlayerScore], players: Mapping[int, PlayerProfile],
                         min_games: int = 3, team_allowlist: Optional[Sequence[str]] = None) -> SymbolicTeam:
    """Top players per position group among those with at least `min_games` games.

    Ties on score go to the player with more games, then alphabetically by name.
    """
    allowed = set(team_allowlist) if team_allowlist else None
    pools: Dict[PositionGroup, List[TeamMember]] = {group: [] for group in FORMATION}
    for score in scores:
        player = players.get(score.player_id)
        if player is None or player.position_group not in FORMATION:
            continue
        if score.games_played < min_games:
            continue
        if allowed is not None and player.team_name not in allowed:
            continue
        pools[player.position_group].append(TeamMember(
            player_id=score.player_id,
            name=player.display_name,
            team=player.team_name,
            position_group=player.position_group,
            normalized_score=score.normalized,
            games_played=score.games_played,
        ))

    members = []
    for group, count in FORMATION.items():
        pool = sorted(pools[group], key=lambda m: (-m.normalized_score, -m.games_played, m.name))
        if len(pool) < count:
            raise SelectionError(
                f"only {len(pool)} eligible {group.value.lower()}s, need {count}",
                {"group": group.value, "eligible": len(pool), "required": count},
            )
        members.extend(pool[:count])

    logger.success(f"🏆 Symbolic team selected from {sum(len(p) for p in pools.values())} eligible players")
    return SymbolicTeam(members=members, min_games=min_games)


@dataclass(frozen=True)
class PlayerReportRow:
    requested: str
    name: str
    team: str
    position: str
    score: Optional[float]
    predicted_change: Optional[float]
    realized_change: Optional[float]
    status: str

    def to_record(self) -> Dict[str, Any]:
        return asdict(self)


def _resolve(requested: str, players: Mapping[int, PlayerProfile]) -> Optional[PlayerProfile]:
    if requested.strip().isdigit():
        return players.get(int(requested))
    wanted = normalize_name(requested)
    for player in players.values():
        if wanted in (normalize_name(player.name), normalize_name(player.nickname or "")):
            return player
    return None


def player_report(requested: Sequence[str], scores: Sequence[PlayerScore], players: Mapping[int, PlayerProfile],
                  transfer_model: Optional[ModelArtifact], transfer_rows: Sequence[TransferRow],
                  links: Optional[Mapping[int, int]] = None) -> List[PlayerReportRow]:
    """One row per requested player (name or StatsBomb id).

    Players without a transfer row keep a row with the value columns left
    empty: `excluded` when `links` maps them to a valuation series, otherwise
    `unlinked`.
    """
    links = links or {}
    by_score = {s.player_id: s for s in scores}
    by_row = {r.player_id: r for r in transfer_rows}
    report_rows = []
    for name in requested:
        player = _resolve(name, players)
        if player is None:
            report_rows.append(PlayerReportRow(name, name, "", "", None, None, None, "unknown_player"))
            continue
        score = by_score.get(player.player_id)
        row = by_row.get(player.player_id)
        predicted = None
        if row is not None and transfer_model is not None:
            predicted = predict_fee_changes(transfer_model, [row])[0]
        report_rows.append(PlayerReportRow(
            requested=name,
            name=player.display_name,
            team=player.team_name,
            position=player.raw_position or "",
            score=score.normalized if score else None,
            predicted_change=predicted,
            realized_change=row.target if row else None,
            status="ok" if row is not None else (EXCLUDED if player.player_id in links else UNLINKED),
        ))

    missing = sum(1 for r in report_rows if r.status != "ok")
    if missing:
        logger.warning(f"   ✗ {missing} of {len(report_rows)} requested players have no transfer row")
    return report_rows


def report_markdown(rows: Sequence[PlayerReportRow]) -> str:
    def _fmt(value: Optional[float]) -> str:
        return f"{value:.2f}" if value is not None else "-"

    lines = ["| Player | Team | Position | Score/game | Predicted change (M EUR) | Realized change (M EUR) |",
             "|---|---|---|---|---|---|"]
    for row in rows:
        name = row.name if row.status == "ok" else f"{row.name} ({row.status})"
        lines.append(f"| {name} | {row.team} | {row.position} | {_fmt(row.score)} | "
                     f"{_fmt(row.predicted_change)} | {_fmt(row.realized_change)} |")
    return "\n".join(lines) + "\n"
