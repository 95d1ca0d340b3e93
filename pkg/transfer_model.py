"""Market-value change around an evaluation window, regressed on the player score."""

from dataclasses import dataclass, field
from datetime import date
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

try:
    from .data_ingest import MatchInfo, PlayerMeta, PositionGroup, ValuationRecord
    from .errors import DatasetError
    from .ml_core import (
        Dataset, FeatureKind, FeatureSpec, ModelArtifact, RegressionReport,
        predict_values, random_split, stratified_split,
    )
    from .valuation_engine import PlayerScore
except ImportError:
    from data_ingest import MatchInfo, PlayerMeta, PositionGroup, ValuationRecord
    from errors import DatasetError
    from ml_core import (
        Dataset, FeatureKind, FeatureSpec, ModelArtifact, RegressionReport,
        predict_values, random_split, stratified_split,
    )
    from valuation_engine import PlayerScore


PLAYER_SCORE_FEATURE = "player_score"
TRANSFER_SCHEMA = [
    FeatureSpec(PLAYER_SCORE_FEATURE, FeatureKind.CONTINUOUS),
    FeatureSpec("position_group", FeatureKind.CATEGORICAL),
    FeatureSpec("evaluation_time", FeatureKind.DISCRETE),
    FeatureSpec("time_lag", FeatureKind.DISCRETE),
    FeatureSpec("age", FeatureKind.DISCRETE),
    FeatureSpec("age_squared", FeatureKind.DISCRETE),
]
EUROS_PER_MILLION = 1_000_000


def whole_months_between(earlier: date, later: date) -> int:
    """Completed calendar months from `earlier` to `later`."""
    months = (later.year - earlier.year) * 12 + (later.month - earlier.month)
    if later.day < earlier.day:
        months -= 1
    return months


def age_on(birth: date, when: date) -> int:
    """Completed years of age on `when`."""
    return when.year - birth.year - ((when.month, when.day) < (birth.month, birth.day))


def tournament_window(matches: Sequence[MatchInfo]) -> Tuple[date, date]:
    """First and last match date of the selected competitions."""
    if not matches:
        raise DatasetError("no matches to derive the evaluation window from")
    dates = [m.match_date for m in matches]
    return min(dates), max(dates)


@dataclass(frozen=True)
class TransferRow:
    player_id: int
    valuation_id: int
    player_score: float
    position_group: PositionGroup
    evaluation_time: int
    time_lag: int
    age: int
    value_before: int
    value_after: int
    before_date: date
    after_date: date

    @property
    def age_squared(self) -> int:
        return self.age * self.age

    @property
    def target(self) -> float:
        return (self.value_after - self.value_before) / EUROS_PER_MILLION

    def features(self) -> Dict[str, Any]:
        return {
            PLAYER_SCORE_FEATURE: self.player_score,
            "position_group": self.position_group.value,
            "evaluation_time": self.evaluation_time,
            "time_lag": self.time_lag,
            "age": self.age,
            "age_squared": self.age_squared,
        }

    def to_record(self) -> Dict[str, Any]:
        record = {"player_id": self.player_id, "valuation_id": self.valuation_id}
        record.update(self.features())
        record.update({
            "value_before": self.value_before,
            "value_after": self.value_after,
            "before_date": self.before_date.isoformat(),
            "after_date": self.after_date.isoformat(),
            "target": self.target,
        })
        return record

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "TransferRow":
        """Inverse of `to_record`; also accepts the string/NumPy values of a parsed CSV."""
        return cls(
            player_id=int(record["player_id"]),
            valuation_id=int(record["valuation_id"]),
            player_score=float(record[PLAYER_SCORE_FEATURE]),
            position_group=PositionGroup(str(record["position_group"])),
            evaluation_time=int(record["evaluation_time"]),
            time_lag=int(record["time_lag"]),
            age=int(record["age"]),
            value_before=int(record["value_before"]),
            value_after=int(record["value_after"]),
            before_date=date.fromisoformat(str(record["before_date"])),
            after_date=date.fromisoformat(str(record["after_date"])),
        )


@dataclass
class TransferExclusions:
    excluded: List[Dict[str, Any]] = field(default_factory=list)

    def add(self, player_id: int, reason: str):
        self.excluded.append({"player_id": player_id, "reason": reason})

    def counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for entry in self.excluded:
            counts[entry["reason"]] = counts.get(entry["reason"], 0) + 1
        return dict(sorted(counts.items()))

    def to_dict(self) -> Dict[str, Any]:
        return {"counts": self.counts(), "excluded": list(self.excluded)}


def _bracket(series: Sequence[ValuationRecord], start: date, end: date):
    before = [r for r in series if r.date <= start]
    after = [r for r in series if r.date >= end]
    return (before[-1] if before else None), (after[0] if after else None)


def build_transfer_rows(scores: Sequence[PlayerScore], valuations: Mapping[int, List[ValuationRecord]],
                        meta: Mapping[int, PlayerMeta], links: Mapping[int, int], window: Tuple[date, date],
                        positions: Optional[Mapping[int, PositionGroup]] = None,
                        exclusions: Optional[TransferExclusions] = None) -> List[TransferRow]:
    """Value change rows for scored players with valuations on both sides of the window.

    value_before is the latest valuation on or before the window start and
    value_after the earliest on or after its end; `positions` (by score
    player id) fills in a position group the valuation metadata lacks.
    """
    start, end = window
    if end < start:
        raise DatasetError(f"evaluation window is inverted: {start} > {end}",
                           {"start": start.isoformat(), "end": end.isoformat()})
    exclusions = exclusions if exclusions is not None else TransferExclusions()
    positions = positions or {}

    rows = []
    for score in sorted(scores, key=lambda s: s.player_id):
        valuation_id = links.get(score.player_id)
        if valuation_id is None:
            exclusions.add(score.player_id, "unlinked")
            continue
        before, after = _bracket(valuations.get(valuation_id, []), start, end)
        if before is None:
            exclusions.add(score.player_id, "no_value_before_window")
            continue
        if after is None:
            exclusions.add(score.player_id, "no_value_after_window")
            continue
        player = meta.get(valuation_id)
        if player is None or player.birth_date is None:
            exclusions.add(score.player_id, "no_birth_date")
            continue
        group = player.position_group or positions.get(score.player_id)
        if group is None:
            exclusions.add(score.player_id, "no_position_group")
            continue
        time_lag = whole_months_between(before.date, after.date)
        if time_lag < 1:
            exclusions.add(score.player_id, "time_lag_below_one_month")
            continue
        rows.append(TransferRow(
            player_id=score.player_id,
            valuation_id=valuation_id,
            player_score=score.normalized,
            position_group=group,
            evaluation_time=score.games_played,
            time_lag=time_lag,
            age=age_on(player.birth_date, end),
            value_before=before.market_value_eur,
            value_after=after.market_value_eur,
            before_date=before.date,
            after_date=after.date,
        ))

    logger.info(f"💶 Transfer rows: {len(rows)} players, {len(exclusions.excluded)} excluded")
    for reason, count in exclusions.counts().items():
        logger.warning(f"   ✗ {count} excluded: {reason}")
    return rows


def rows_to_dataset(rows: Sequence[TransferRow]) -> Dataset:
    records = []
    for row in rows:
        record = row.features()
        record["row_id"] = str(row.player_id)
        record["target"] = row.target
        records.append(record)
    return Dataset.from_records(TRANSFER_SCHEMA, records, target_key="target")


def build_transfer_dataset(scores: Sequence[PlayerScore], valuations: Mapping[int, List[ValuationRecord]],
                           meta: Mapping[int, PlayerMeta], links: Mapping[int, int], window: Tuple[date, date],
                           positions: Optional[Mapping[int, PositionGroup]] = None,
                           exclusions: Optional[TransferExclusions] = None) -> Dataset:
    return rows_to_dataset(build_transfer_rows(scores, valuations, meta, links, window, positions, exclusions))


def split_transfer_dataset(d: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Split stratified on the sign of the value change, or plainly when a sign is too rare."""
    try:
        return stratified_split(d, test_fraction, seed, strata=np.sign(d.target))
    except DatasetError as e:
        logger.warning(f"   ✗ sign-stratified split impossible ({e.message}); splitting at random")
        return random_split(d, test_fraction, seed)


def predict_fee_changes(m: ModelArtifact, rows: Sequence[TransferRow]) -> List[float]:
    """Predicted value change in millions of euros, in input order."""
    if not rows:
        return []
    return predict_values(m, rows_to_dataset(rows)).tolist()


def predict_fee_change(m: ModelArtifact, row: TransferRow) -> float:
    return predict_fee_changes(m, [row])[0]


def target_summary(d: Dataset) -> Dict[str, float]:
    """Spread and absolute volume of the value changes, to put MAE in context."""
    if len(d) == 0:
        return {"target_range": 0.0, "target_abs_sum": 0.0}
    return {
        "target_range": float(d.target.max() - d.target.min()),
        "target_abs_sum": float(np.abs(d.target).sum()),
    }


def transfer_report(report: RegressionReport, full: Dataset) -> Dict[str, Any]:
    data = report.to_dict()
    data.update(target_summary(full))
    data["mae_to_abs_sum_ratio"] = data["mae"] / data["target_abs_sum"] if data["target_abs_sum"] else None
    data["player_score_rank"] = report.importance_rank(PLAYER_SCORE_FEATURE)
    return data
