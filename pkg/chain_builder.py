"""Possession chains: uninterrupted same-team action runs that end in a shot."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from loguru import logger

try:
    from .data_ingest import Event, EventType
    from .pitch_geometry import BallState
except ImportError:
    from data_ingest import Event, EventType
    from pitch_geometry import BallState


# Opponent events that take the ball away. Duels only count when won.
BREAKING_TYPES = frozenset({
    EventType.INTERCEPTION,
    EventType.CLEARANCE,
    EventType.PASS,
    EventType.CARRY,
    EventType.DRIBBLE,
    EventType.SHOT,
})
DUEL_WON_OUTCOMES = frozenset({"Won", "Success", "Success In Play", "Success Out"})


def breaks_possession(event: Event, team_id: int) -> bool:
    """True if `event` is an opponent touch that ends `team_id`'s chain."""
    if event.team_id == team_id:
        return False
    if event.event_type in BREAKING_TYPES:
        return True
    return event.event_type is EventType.DUEL and event.outcome in DUEL_WON_OUTCOMES


def is_chain_action(event: Event) -> bool:
    """Ball-progressing touch with a known ball state."""
    return event.is_on_ball_action and event.location is not None


@dataclass(frozen=True)
class Action:
    """Position k (1-based) of an action inside its chain."""

    event: Event
    k: int
    start_state: BallState
    end_state: BallState

    @property
    def play_pattern(self) -> str:
        return self.event.play_pattern


@dataclass
class PossessionChain:
    chain_id: int
    match_id: int
    team_id: int
    actions: List[Action]
    ends_in_goal: bool

    @property
    def key(self) -> str:
        return f"{self.match_id}:{self.chain_id}"

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def shot(self) -> Action:
        return self.actions[-1]

    def to_record(self) -> Dict[str, Any]:
        return {
            "chain_id": self.chain_id,
            "match_id": self.match_id,
            "team_id": self.team_id,
            "ends_in_goal": self.ends_in_goal,
            "actions": [
                {
                    "k": a.k,
                    "start_state": list(a.start_state.as_tuple()),
                    "end_state": list(a.end_state.as_tuple()),
                    "event": a.event.to_record(),
                }
                for a in self.actions
            ],
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "PossessionChain":
        actions = [
            Action(
                event=Event.from_record(a["event"]),
                k=a["k"],
                start_state=BallState(*a["start_state"]),
                end_state=BallState(*a["end_state"]),
            )
            for a in record["actions"]
        ]
        return cls(record["chain_id"], record["match_id"], record["team_id"], actions, record["ends_in_goal"])


@dataclass
class ChainReport:
    shots_seen: int = 0
    chains: int = 0
    dropped_shots: List[str] = field(default_factory=list)

    def merge(self, other: "ChainReport"):
        self.shots_seen += other.shots_seen
        self.chains += other.chains
        self.dropped_shots.extend(other.dropped_shots)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "shots_seen": self.shots_seen,
            "chains": self.chains,
            "dropped_shots": list(self.dropped_shots),
        }


def _make_chain(run: List[Event], chain_id: int) -> PossessionChain:
    actions = []
    for k, event in enumerate(run, start=1):
        end = run[k].location if k < len(run) else event.location
        actions.append(Action(event=event, k=k, start_state=event.location, end_state=end))
    shot = run[-1]
    return PossessionChain(
        chain_id=chain_id,
        match_id=shot.match_id,
        team_id=shot.team_id,
        actions=actions,
        ends_in_goal=bool(shot.shot_detail and shot.shot_detail.is_goal),
    )


def extract_chains(events: List[Event], report: Optional[ChainReport] = None) -> List[PossessionChain]:
    """Segment one match's events into shot-terminated possession chains.

    A run of same-team on-ball actions is cut at every possession id change,
    period change and opponent touch (see `breaks_possession`); other events
    such as receipts and pressure are absorbed. Each shot closes the current
    run, so a later shot in the same possession starts a fresh chain.

    Args:
        events: One match's events in file order.
        report: Accumulates shot counts and dropped shots; a fresh one if None.

    Returns:
        Chains numbered from 1 in order of their closing shot. Shots without a
        location or shot detail are dropped and recorded in `report`; they
        still end the run before them.
    """
    report = report if report is not None else ChainReport()
    chains: List[PossessionChain] = []
    run: List[Event] = []
    current_possession = None
    current_period = None

    for event in events:
        if event.possession_id != current_possession or event.period != current_period:
            run = []
            current_possession = event.possession_id
            current_period = event.period

        if run and breaks_possession(event, run[0].team_id):
            run = []

        if event.event_type is EventType.SHOT:
            report.shots_seen += 1
            if event.location is None or event.shot_detail is None:
                report.dropped_shots.append(f"{event.match_id}#{event.event_index}")
                run = []
                continue

        if not is_chain_action(event):
            continue

        run.append(event)
        if event.event_type is EventType.SHOT:
            chains.append(_make_chain(run, len(chains) + 1))
            run = []

    report.chains += len(chains)
    return chains


def extract_all_chains(events_by_match: Dict[int, List[Event]],
                       report: Optional[ChainReport] = None) -> List[PossessionChain]:
    """Chains of every match, ordered by (match_id, chain_id)."""
    report = report if report is not None else ChainReport()
    chains: List[PossessionChain] = []
    for match_id in sorted(events_by_match):
        chains.extend(extract_chains(events_by_match[match_id], report))

    logger.info(f"🔗 Extracted {len(chains)} possession chains from {report.shots_seen} shots")
    if report.dropped_shots:
        logger.warning(f"   ✗ {len(report.dropped_shots)} shots without location or detail dropped")
    return chains


def label_chain(chain: PossessionChain) -> int:
    """1 if the chain's final shot is a goal, else 0."""
    return 1 if chain.ends_in_goal else 0
