"""Tests for action credits and player aggregation."""

import math
import random

import numpy as np
import pytest

from data_ingest import EventType, PositionGroup
from errors import ValuationError
from estimators import Algorithm
from ml_core import train_classifier
from pitch_geometry import Zone
from scoring_predictor import build_scorer_dataset
from valuation_engine import (
    DEFAULT_ROLE_WEIGHTS,
    ActionCredit,
    RoleWeightTable,
    action_delta,
    aggregate_scores,
    credit_chain,
    final_action_credit,
    rank_players,
    score_chains,
    weighted,
)
from xg_model import build_xg_dataset

P, C, S = EventType.PASS, EventType.CARRY, EventType.SHOT
D, M, F = PositionGroup.DEFENDER, PositionGroup.MIDFIELDER, PositionGroup.STRIKER
ROLES = {1: D, 2: M, 3: F, 4: PositionGroup.GOALKEEPER}


def _credit(player_id, match_id, chain_id, k, value):
    return ActionCredit(player_id, match_id, chain_id, k, value, Zone.MIDFIELD, 1.0, value)


def test_delta_examples():
    assert action_delta(0.12, 0.05) == pytest.approx(0.07)
    assert final_action_credit(0.3, True) == pytest.approx(0.7)
    assert final_action_credit(0.3, False) == pytest.approx(-0.3)
    assert final_action_credit(1.0, True) == 0.0


def test_weighting_only_scales_positive_credits():
    assert weighted(0.1, 2.0) == pytest.approx(0.2)
    assert weighted(-0.1, 2.0) == -0.1
    assert weighted(0.0, 2.0) == 0.0


@pytest.mark.parametrize("role,x,expected", [
    (D, 90.0, 0.20),
    (D, 60.0, 0.15),
    (D, 10.0, 0.10),
    (F, 90.0, 0.10),
    (M, 90.0, 0.15),
    (M, 60.0, 0.10),
    (PositionGroup.GOALKEEPER, 90.0, 0.20),
])
def test_role_zone_multipliers(chain_factory, role, x, expected):
    chain = chain_factory([(P, 7, x, 40.0), (S, 3, 110.0, 40.0)])
    credits = credit_chain(chain, [0.2], 0.3, {7: role, 3: F})
    assert credits[0].raw_delta == pytest.approx(0.1)
    assert credits[0].weighted_credit == pytest.approx(expected)


def test_negative_credit_is_not_scaled(chain_factory):
    chain = chain_factory([(P, 1, 90.0, 40.0), (S, 3, 110.0, 40.0)])
    credits = credit_chain(chain, [0.4], 0.3, ROLES)
    assert credits[0].weighted_credit == pytest.approx(-0.1)
    assert credits[0].multiplier == 2.0


def test_multipliers_favour_defenders_then_midfielders():
    for zone in Zone:
        d = DEFAULT_ROLE_WEIGHTS.multiplier(D, zone)
        m = DEFAULT_ROLE_WEIGHTS.multiplier(M, zone)
        s = DEFAULT_ROLE_WEIGHTS.multiplier(F, zone)
        assert d >= m >= s >= 1.0


def test_multipliers_below_one_are_rejected():
    with pytest.raises(ValuationError):
        RoleWeightTable({D: {Zone.DEFENDING: 0.5, Zone.MIDFIELD: 1.0, Zone.ATTACKING: 1.0}})


def test_constant_probabilities_leave_only_the_shot_credit(chain_factory):
    chain = chain_factory([(P, 1, 30.0, 40.0), (C, 2, 60.0, 40.0), (P, 2, 80.0, 40.0), (S, 3, 105.0, 40.0)],
                          scored=True)
    credits = credit_chain(chain, [0.3, 0.3, 0.3], 0.3, ROLES)
    assert [c.raw_delta for c in credits[:-1]] == [0.0, 0.0, 0.0]
    assert credits[-1].is_final
    assert credits[-1].raw_delta == pytest.approx(0.7)


def test_single_action_chain_gets_only_the_shot_credit(chain_factory):
    chain = chain_factory([(S, 3, 105.0, 40.0)])
    credits = credit_chain(chain, [], 0.25, ROLES)
    assert len(credits) == 1
    assert credits[0].raw_delta == pytest.approx(-0.25)


def test_non_final_deltas_telescope(chain_factory):
    rng = random.Random(5)
    for trial in range(200):
        k = rng.randint(2, 12)
        steps = [(P, rng.choice([1, 2, 3]), rng.uniform(0, 119), rng.uniform(0, 80)) for _ in range(k - 1)]
        chain = chain_factory(steps + [(S, 3, 110.0, 40.0)], scored=rng.random() < 0.3)
        probabilities = [rng.random() for _ in range(k - 1)]
        c_xg = rng.random()
        credits = credit_chain(chain, probabilities, c_xg, ROLES)
        telescoped = math.fsum(c.raw_delta for c in credits if not c.is_final)
        assert telescoped == pytest.approx(c_xg - probabilities[0], abs=1e-12)


def test_players_without_role_are_listed(chain_factory):
    chain = chain_factory([(P, 8, 30.0, 40.0), (P, 9, 60.0, 40.0), (S, 3, 105.0, 40.0)])
    with pytest.raises(ValuationError, match=r"\[8, 9\]") as excinfo:
        credit_chain(chain, [0.1, 0.2], 0.3, ROLES)
    assert excinfo.value.details["player_ids"] == [8, 9]


def test_probability_count_must_match(chain_factory):
    chain = chain_factory([(P, 1, 30.0, 40.0), (S, 3, 105.0, 40.0)])
    with pytest.raises(ValuationError):
        credit_chain(chain, [0.1, 0.2], 0.3, ROLES)


def test_shooter_delta_suppression(chain_factory):
    own = chain_factory([(P, 1, 30.0, 40.0), (C, 3, 90.0, 40.0), (S, 3, 105.0, 40.0)])
    other = chain_factory([(P, 1, 30.0, 40.0), (P, 2, 90.0, 40.0), (S, 3, 105.0, 40.0)])
    suppressed = credit_chain(own, [0.1, 0.2], 0.5, ROLES, suppress_shooter_delta=True)
    assert suppressed[1].raw_delta == 0.0 and suppressed[1].suppressed
    assert suppressed[0].raw_delta == pytest.approx(0.1)
    kept = credit_chain(other, [0.1, 0.2], 0.5, ROLES, suppress_shooter_delta=True)
    assert kept[1].raw_delta == pytest.approx(0.3) and not kept[1].suppressed


def test_aggregation_examples():
    scores = aggregate_scores([_credit(1, 1, 1, 1, 0.1), _credit(1, 1, 2, 1, -0.05)], {1: 1})
    assert scores[0].total == 0.05

    credits = [_credit(2, m, c, 1, 0.5) for m, c in [(1, 1), (1, 2), (2, 1), (3, 1)]]
    score = aggregate_scores(credits, {2: 4})[0]
    assert score.total == 2.0
    assert score.normalized == 0.5


def test_chain_and_match_counts():
    credits = [_credit(5, 1, 1, 1, 0.1), _credit(5, 1, 1, 2, 0.1), _credit(5, 1, 3, 1, 0.1),
               _credit(5, 2, 1, 1, 0.1)]
    score = aggregate_scores(credits, {5: 2})[0]
    assert score.chains_participated == 3
    assert set(score.per_match) == {1, 2}
    assert score.per_chain["1:1"] == pytest.approx(0.2)


def test_missing_appearances_are_an_error():
    with pytest.raises(ValuationError, match="without appearances"):
        aggregate_scores([_credit(1, 1, 1, 1, 0.1)], {})
    with pytest.raises(ValuationError):
        aggregate_scores([_credit(1, 1, 1, 1, 0.1)], {1: 0})


def test_aggregation_ignores_input_order():
    rng = random.Random(11)
    credits = [_credit(rng.randint(1, 5), rng.randint(1, 3), rng.randint(1, 20), rng.randint(1, 6),
                       rng.uniform(-0.3, 0.3)) for _ in range(500)]
    appearances = {p: 3 for p in range(1, 6)}
    expected = [s.to_record() for s in aggregate_scores(credits, appearances)]
    for _ in range(5):
        rng.shuffle(credits)
        assert [s.to_record() for s in aggregate_scores(credits, appearances)] == expected


def test_ranking_survives_positive_scaling():
    credits = [_credit(p, 1, 1, 1, v) for p, v in [(1, 0.3), (2, -0.1), (3, 0.7), (4, 0.05)]]
    scaled = [_credit(c.player_id, 1, 1, 1, c.weighted_credit * 3.0) for c in credits]
    appearances = {p: 1 for p in range(1, 5)}
    order = [s.player_id for s in rank_players(aggregate_scores(credits, appearances))]
    assert order == [3, 1, 4, 2]
    assert [s.player_id for s in rank_players(aggregate_scores(scaled, appearances))] == order


def test_score_chains_with_trained_models(chain_factory):
    rng = np.random.default_rng(0)
    chains = []
    for i in range(1, 121):
        start = float(rng.uniform(10.0, 110.0))
        scored = bool(rng.random() < (0.6 if start > 80 else 0.1))
        shot_x = 112.0 if scored else 95.0
        chains.append(chain_factory([(P, 1, start, 40.0), (C, 2, min(start + 5, 115.0), 35.0),
                                     (S, 3, shot_x, 40.0)], scored=scored, chain_id=i))
    grid = {"n_trees": [10], "max_depth": [2]}
    scorer = train_classifier(Algorithm.GRADIENT_BOOSTED_TREES, build_scorer_dataset(chains), None, grid, seed=0)
    xg = train_classifier(Algorithm.GRADIENT_BOOSTED_TREES, build_xg_dataset(chains), None, grid, seed=0)

    credits = score_chains(chains, scorer, xg, ROLES)
    assert len(credits) == 3 * len(chains)
    by_chain = {}
    for credit in credits:
        by_chain.setdefault(credit.chain_key, []).append(credit)
    for chain_credits in by_chain.values():
        assert [c.k for c in chain_credits] == [1, 2, 3]
        assert [c.is_final for c in chain_credits] == [False, False, True]

    scores = aggregate_scores(credits, {1: 4, 2: 4, 3: 4})
    assert [s.player_id for s in scores] == [1, 2, 3]
