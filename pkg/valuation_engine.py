"""Per-action credits from scoring-probability deltas and their per-player aggregation.

Within a chain of K actions, action k < K moves the ball from s_k to s_{k+1}
and earns P(score|s_{k+1}) - P(score|s_k). For k = K-1 the successor
probability is the shot's xG. The shooter also earns 1 - xG for a goal and
-xG for a miss. Positive credits are scaled by a role/zone multiplier.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

from loguru import logger

try:
    from .chain_builder import PossessionChain
    from .data_ingest import PositionGroup
    from .errors import ValuationError
    from .ml_core import ModelArtifact
    from .pitch_geometry import DEFAULT_PITCH, PitchSpec, Zone, zone_of
    from .scoring_predictor import score_chain_states
    from .xg_model import xg_scores
except ImportError:
    from chain_builder import PossessionChain
    from data_ingest import PositionGroup
    from errors import ValuationError
    from ml_core import ModelArtifact
    from pitch_geometry import DEFAULT_PITCH, PitchSpec, Zone, zone_of
    from scoring_predictor import score_chain_states
    from xg_model import xg_scores


@dataclass(frozen=True)
class RoleWeightTable:
    """Multiplier on successful (positive) credits by role and zone."""

    multipliers: Mapping[PositionGroup, Mapping[Zone, float]]

    def __post_init__(self):
        problems = [
            f"{role.value}/{zone.value}={value}"
            for role, row in self.multipliers.items()
            for zone, value in row.items()
            if value < 1
        ]
        if problems:
            raise ValuationError(f"role multipliers must be >= 1: {problems}", {"problems": problems})

    def multiplier(self, role: PositionGroup, zone: Zone) -> float:
        if role is PositionGroup.GOALKEEPER:
            role = PositionGroup.DEFENDER
        return self.multipliers[role][zone]


DEFAULT_ROLE_WEIGHTS = RoleWeightTable({
    PositionGroup.DEFENDER: {Zone.DEFENDING: 1.0, Zone.MIDFIELD: 1.5, Zone.ATTACKING: 2.0},
    PositionGroup.MIDFIELDER: {Zone.DEFENDING: 1.0, Zone.MIDFIELD: 1.0, Zone.ATTACKING: 1.5},
    PositionGroup.STRIKER: {Zone.DEFENDING: 1.0, Zone.MIDFIELD: 1.0, Zone.ATTACKING: 1.0},
})


@dataclass(frozen=True)
class ActionCredit:
    player_id: int
    match_id: int
    chain_id: int
    k: int
    raw_delta: float
    zone: Zone
    multiplier: float
    weighted_credit: float
    is_final: bool = False
    suppressed: bool = False

    @property
    def chain_key(self) -> str:
        return f"{self.match_id}:{self.chain_id}"

    def to_record(self) -> Dict[str, Any]:
        return {
            "player_id": self.player_id,
            "match_id": self.match_id,
            "chain_id": self.chain_id,
            "k": self.k,
            "raw_delta": self.raw_delta,
            "zone": self.zone.value,
            "multiplier": self.multiplier,
            "weighted_credit": self.weighted_credit,
            "is_final": self.is_final,
            "suppressed": self.suppressed,
        }


def action_delta(p_next: float, p_curr: float) -> float:
    """Change in scoring probability caused by one action."""
    return p_next - p_curr


def final_action_credit(c_xg: float, scored: bool) -> float:
    """Reward 1 - xG for a goal, penalty -xG for a miss."""
    return 1.0 - c_xg if scored else -c_xg


def weighted(raw: float, multiplier: float) -> float:
    return raw * multiplier if raw > 0 else raw


def credit_chain(chain: PossessionChain, state_probabilities: Sequence[float], c_xg: float,
                 roles: Mapping[int, PositionGroup], weights: RoleWeightTable = DEFAULT_ROLE_WEIGHTS,
                 spec: PitchSpec = DEFAULT_PITCH, suppress_shooter_delta: bool = False) -> List[ActionCredit]:
    """Credits of one chain from its state-value trajectory.

    Args:
        chain: Shot-terminated chain of K actions.
        state_probabilities: P(score|s_k) for the K-1 non-final actions, in order.
        c_xg: Expected-goals value of the chain's shot.
        roles: Position group of every player in the chain.
        weights: Role/zone multiplier table.
        spec: Pitch used to place each action's start state in a zone.
        suppress_shooter_delta: Zero the shooter's own delta on the action just before the shot.

    Returns:
        One ActionCredit per action, ordered by k.

    Raises:
        ValuationError: If the probability count is not K-1 or a player has no role.
    """
    if len(state_probabilities) != chain.length - 1:
        raise ValuationError(
            f"chain {chain.key} needs {chain.length - 1} state probabilities, got {len(state_probabilities)}",
            {"chain": chain.key},
        )
    missing = sorted({a.event.player_id for a in chain.actions if roles.get(a.event.player_id) is None},
                     key=lambda p: (p is None, p))
    if missing:
        raise ValuationError(f"players without a role in chain {chain.key}: {missing}",
                             {"chain": chain.key, "player_ids": missing})

    trajectory = list(state_probabilities) + [c_xg]
    shooter = chain.shot.event.player_id
    credits = []
    for action in chain.actions:
        player_id = action.event.player_id
        zone = zone_of(action.start_state, spec)
        multiplier = weights.multiplier(roles[player_id], zone)
        is_final = action.k == chain.length
        suppressed = False
        if is_final:
            raw = final_action_credit(c_xg, chain.ends_in_goal)
        else:
            raw = action_delta(trajectory[action.k], trajectory[action.k - 1])
            if suppress_shooter_delta and action.k == chain.length - 1 and player_id == shooter:
                raw, suppressed = 0.0, True
        credits.append(ActionCredit(
            player_id=player_id,
            match_id=chain.match_id,
            chain_id=chain.chain_id,
            k=action.k,
            raw_delta=raw,
            zone=zone,
            multiplier=multiplier,
            weighted_credit=weighted(raw, multiplier),
            is_final=is_final,
            suppressed=suppressed,
        ))
    return credits


def score_chain(chain: PossessionChain, scorer_model: ModelArtifact, xg_model: ModelArtifact,
                roles: Mapping[int, PositionGroup], weights: RoleWeightTable = DEFAULT_ROLE_WEIGHTS,
                spec: PitchSpec = DEFAULT_PITCH, suppress_shooter_delta: bool = False) -> List[ActionCredit]:
    return score_chains([chain], scorer_model, xg_model, roles, weights, spec, suppress_shooter_delta)


def score_chains(chains: Sequence[PossessionChain], scorer_model: ModelArtifact, xg_model: ModelArtifact,
                 roles: Mapping[int, PositionGroup], weights: RoleWeightTable = DEFAULT_ROLE_WEIGHTS,
                 spec: PitchSpec = DEFAULT_PITCH, suppress_shooter_delta: bool = False) -> List[ActionCredit]:
    """Credits of every chain, with model inference batched across chains."""
    states = score_chain_states(scorer_model, chains)
    shots = xg_scores(xg_model, [chain.shot for chain in chains], spec)
    credits = []
    for chain, c_xg in zip(chains, shots):
        credits.extend(credit_chain(chain, states[chain.key], c_xg, roles, weights, spec, suppress_shooter_delta))
    logger.info(f"⚖️ Credited {len(credits)} actions in {len(chains)} chains"
                + (" (shooter delta suppressed)" if suppress_shooter_delta else ""))
    return credits


@dataclass
class PlayerScore:
    player_id: int
    games_played: int
    chains_participated: int
    per_chain: Dict[str, float] = field(default_factory=dict)
    per_match: Dict[int, float] = field(default_factory=dict)
    total: float = 0.0

    @property
    def normalized(self) -> float:
        return self.total / self.games_played

    def to_record(self) -> Dict[str, Any]:
        return {
            "player_id": self.player_id,
            "games_played": self.games_played,
            "chains_participated": self.chains_participated,
            "total": self.total,
            "normalized": self.normalized,
        }


def aggregate_scores(credits: Sequence[ActionCredit], appearances: Mapping[int, int]) -> List[PlayerScore]:
    """Chain, match and per-game totals for every credited player, ordered by player id.

    Credits are summed in (player, match, chain, k) order with exact rounding,
    so the result does not depend on the input order.
    """
    ordered = sorted(credits, key=lambda c: (c.player_id, c.match_id, c.chain_id, c.k, c.is_final))

    by_player: Dict[int, List[ActionCredit]] = {}
    for credit in ordered:
        by_player.setdefault(credit.player_id, []).append(credit)

    missing = [p for p in by_player if not appearances.get(p)]
    if missing:
        raise ValuationError(f"credited players without appearances: {missing}", {"player_ids": missing})

    scores = []
    for player_id, player_credits in by_player.items():
        chains: Dict[str, List[float]] = {}
        matches: Dict[int, List[float]] = {}
        for credit in player_credits:
            chains.setdefault(credit.chain_key, []).append(credit.weighted_credit)
            matches.setdefault(credit.match_id, []).append(credit.weighted_credit)
        per_chain = {key: math.fsum(values) for key, values in chains.items()}
        scores.append(PlayerScore(
            player_id=player_id,
            games_played=int(appearances[player_id]),
            chains_participated=len(per_chain),
            per_chain=per_chain,
            per_match={m: math.fsum(values) for m, values in matches.items()},
            total=math.fsum(per_chain.values()),
        ))
    return scores


def rank_players(scores: Sequence[PlayerScore]) -> List[PlayerScore]:
    """Highest normalized score first; ties by player id."""
    return sorted(scores, key=lambda s: (-s.normalized, s.player_id))
