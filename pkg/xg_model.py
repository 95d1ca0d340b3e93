"""Expected-goals rows from the final shot of every possession chain."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from loguru import logger

try:
    from .chain_builder import Action, PossessionChain, label_chain
    from .errors import ValuationError
    from .ml_core import Dataset, FeatureKind, FeatureSpec, ModelArtifact, PredictionStats, predict_proba
    from .pitch_geometry import DEFAULT_PITCH, PitchSpec, goal_distance, shooting_angle
except ImportError:
    from chain_builder import Action, PossessionChain, label_chain
    from errors import ValuationError
    from ml_core import Dataset, FeatureKind, FeatureSpec, ModelArtifact, PredictionStats, predict_proba
    from pitch_geometry import DEFAULT_PITCH, PitchSpec, goal_distance, shooting_angle


XG_SCHEMA = [
    FeatureSpec("technique", FeatureKind.CATEGORICAL),
    FeatureSpec("body_part", FeatureKind.CATEGORICAL),
    FeatureSpec("shot_type", FeatureKind.CATEGORICAL),
    FeatureSpec("under_pressure", FeatureKind.CATEGORICAL),
    FeatureSpec("angle", FeatureKind.CONTINUOUS),
    FeatureSpec("distance", FeatureKind.CONTINUOUS),
]

PENALTY_SHOT_TYPE = "Penalty"


@dataclass
class XgDatasetReport:
    rows: int = 0
    goals: int = 0
    skipped_without_detail: List[str] = field(default_factory=list)
    excluded_penalties: int = 0

    @property
    def prevalence(self) -> float:
        return self.goals / self.rows if self.rows else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rows": self.rows,
            "goals": self.goals,
            "prevalence": self.prevalence,
            "skipped_without_detail": list(self.skipped_without_detail),
            "excluded_penalties": self.excluded_penalties,
        }


def shot_features(action: Action, spec: PitchSpec = DEFAULT_PITCH) -> Optional[Dict[str, Any]]:
    """Feature record of a shot action, or None when the shot has no detail."""
    detail = action.event.shot_detail
    if detail is None:
        return None
    return {
        "technique": detail.technique,
        "body_part": detail.body_part,
        "shot_type": detail.shot_type,
        "under_pressure": str(bool(action.event.under_pressure)),
        "angle": shooting_angle(action.start_state, spec),
        "distance": goal_distance(action.start_state, spec),
    }


def build_xg_dataset(chains: Sequence[PossessionChain], spec: PitchSpec = DEFAULT_PITCH,
                     exclude_penalties: bool = False,
                     report: Optional[XgDatasetReport] = None) -> Dataset:
    """One row per chain-ending shot, labelled with whether it scored."""
    report = report if report is not None else XgDatasetReport()
    records = []
    for chain in chains:
        features = shot_features(chain.shot, spec)
        if features is None:
            report.skipped_without_detail.append(chain.key)
            continue
        if exclude_penalties and features["shot_type"] == PENALTY_SHOT_TYPE:
            report.excluded_penalties += 1
            continue
        features["row_id"] = chain.key
        features["label"] = label_chain(chain)
        records.append(features)

    dataset = Dataset.from_records(XG_SCHEMA, records)
    report.rows = len(dataset)
    report.goals = int(sum(r["label"] for r in records))
    logger.info(f"🎯 xG dataset: {report.rows} shots, {report.goals} goals, prevalence {report.prevalence:.3f}")
    if report.skipped_without_detail:
        logger.warning(f"   ✗ {len(report.skipped_without_detail)} shots without shot detail skipped")
    return dataset


def xg_scores(m: ModelArtifact, shots: Sequence[Action], spec: PitchSpec = DEFAULT_PITCH,
              stats: Optional[PredictionStats] = None) -> List[float]:
    """c_xG for a batch of shot actions, in input order."""
    records = []
    for i, action in enumerate(shots):
        features = shot_features(action, spec)
        if features is None:
            raise ValuationError(
                f"shot {action.event.match_id}#{action.event.event_index} has no shot detail",
                {"match_id": action.event.match_id, "event_index": action.event.event_index},
            )
        features["row_id"] = str(i)
        features["label"] = 0
        records.append(features)
    if not records:
        return []
    return predict_proba(m, Dataset.from_records(XG_SCHEMA, records), stats).tolist()


def xg_score(m: ModelArtifact, shot_action: Action, spec: PitchSpec = DEFAULT_PITCH) -> float:
    return xg_scores(m, [shot_action], spec)[0]
