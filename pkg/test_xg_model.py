"""Tests for xG rows and scoring."""

from dataclasses import replace

import numpy as np
import pytest

from data_ingest import EventType, ShotDetail
from errors import ValuationError
from estimators import Algorithm
from ml_core import stratified_split, train_classifier
from xg_model import XG_SCHEMA, XgDatasetReport, build_xg_dataset, shot_features, xg_score, xg_scores

P, S = EventType.PASS, EventType.SHOT


def _shot_chain(chain_factory, i, x, y, scored, shot_type="Open Play"):
    detail = ShotDetail("Normal", "Right Foot", shot_type, scored)
    return chain_factory([(P, 1, 60.0, 40.0), (S, 2, x, y)], scored=scored, chain_id=i, shot_detail=detail)


def _distance_driven_chains(chain_factory, n=200, seed=0):
    rng = np.random.default_rng(seed)
    chains = []
    for i in range(1, n + 1):
        x = float(rng.uniform(85.0, 119.0))
        y = float(rng.uniform(25.0, 55.0))
        scored = bool(rng.random() < (0.7 if x > 108 else 0.05))
        chains.append(_shot_chain(chain_factory, i, x, y, scored))
    return chains


def test_one_row_per_chain_with_prevalence(chain_factory):
    chains = [_shot_chain(chain_factory, i, 100.0, 40.0, i <= 22) for i in range(1, 101)]
    report = XgDatasetReport()
    d = build_xg_dataset(chains, report=report)
    assert len(d) == 100
    assert d.prevalence == pytest.approx(0.22)
    assert report.goals == 22
    assert d.row_ids[0] == "1:1"
    assert d.feature_names == [f.name for f in XG_SCHEMA]


def test_empty_input_gives_empty_dataset():
    assert len(build_xg_dataset([])) == 0


def test_penalty_spot_features(chain_factory):
    chain = _shot_chain(chain_factory, 1, 108.0, 40.0, True, "Penalty")
    features = shot_features(chain.shot)
    assert features["distance"] == pytest.approx(12.0)
    assert features["angle"] == pytest.approx(0.6435011, abs=1e-7)
    assert features["under_pressure"] == "False"
    assert features["shot_type"] == "Penalty"


def test_penalties_can_be_excluded(chain_factory):
    chains = [_shot_chain(chain_factory, 1, 108.0, 40.0, True, "Penalty"),
              _shot_chain(chain_factory, 2, 100.0, 30.0, False)]
    report = XgDatasetReport()
    d = build_xg_dataset(chains, exclude_penalties=True, report=report)
    assert d.row_ids == ["1:2"]
    assert report.excluded_penalties == 1
    assert len(build_xg_dataset(chains)) == 2


def test_shot_without_detail_is_skipped(chain_factory):
    chain = _shot_chain(chain_factory, 1, 100.0, 40.0, False)
    shot_event = chain.shot.event
    bare = replace(chain.shot, event=replace(shot_event, shot_detail=None))
    chain.actions[-1] = bare
    report = XgDatasetReport()
    assert len(build_xg_dataset([chain], report=report)) == 0
    assert report.skipped_without_detail == ["1:1"]
    with pytest.raises(ValuationError):
        xg_scores(None, [bare])


def test_closer_central_shots_score_higher(chain_factory):
    chains = _distance_driven_chains(chain_factory)
    train, _ = stratified_split(build_xg_dataset(chains), 0.3, seed=0)
    m = train_classifier(Algorithm.LOGISTIC_REGRESSION, train, None, {"l2": [1.0]}, seed=0)
    near = _shot_chain(chain_factory, 900, 115.0, 40.0, False)
    far = _shot_chain(chain_factory, 901, 88.0, 40.0, False)
    assert xg_score(m, near.shot) > xg_score(m, far.shot)

    scores = xg_scores(m, [c.shot for c in chains])
    assert len(scores) == len(chains)
    assert all(0.0 <= s <= 1.0 for s in scores)
    assert xg_scores(m, []) == []
