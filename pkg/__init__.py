"""Possession-chain player valuation and transfer-value pipeline."""

from .applications import SymbolicTeam, player_report, select_symbolic_team
from .chain_builder import PossessionChain, extract_chains
from .ml_core import Dataset, ModelArtifact, evaluate_classifier, evaluate_regressor, train_classifier, train_regressor
from .pitch_geometry import BallState, PitchSpec, Zone, goal_distance, shooting_angle, zone_of
from .valuation_engine import PlayerScore, aggregate_scores, score_chain

__all__ = [
    "BallState",
    "Dataset",
    "ModelArtifact",
    "PitchSpec",
    "PlayerScore",
    "PossessionChain",
    "SymbolicTeam",
    "Zone",
    "aggregate_scores",
    "evaluate_classifier",
    "evaluate_regressor",
    "extract_chains",
    "goal_distance",
    "player_report",
    "score_chain",
    "select_symbolic_team",
    "shooting_angle",
    "train_classifier",
    "train_regressor",
    "zone_of",
]
