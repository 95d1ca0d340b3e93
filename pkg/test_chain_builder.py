"""Tests for possession-chain segmentation."""

import random

import pytest

from chain_builder import (
    ChainReport,
    PossessionChain,
    extract_all_chains,
    extract_chains,
    label_chain,
)
from data_ingest import EventType, ShotDetail

P, C, D, S = EventType.PASS, EventType.CARRY, EventType.DRIBBLE, EventType.SHOT
SHOT = ShotDetail("Normal", "Right Foot", "Open Play", False)
GOAL = ShotDetail("Normal", "Right Foot", "Open Play", True)


def _indices(chains):
    return [[a.event.event_index for a in c.actions] for c in chains]


def _random_stream(rng: random.Random, make_event):
    kinds = [P, P, P, C, C, D, S, EventType.INTERCEPTION, EventType.CLEARANCE,
             EventType.DUEL, EventType.BALL_RECEIPT, EventType.OTHER]
    events = []
    possession, period = 1, 1
    for i in range(rng.randint(1, 40)):
        if rng.random() < 0.1:
            possession += 1
        if rng.random() < 0.02:
            period += 1
        kind = rng.choice(kinds)
        location = None if rng.random() < 0.1 else (rng.uniform(0, 120), rng.uniform(0, 80))
        outcome = rng.choice(["Won", "Lost In Play", "Success In Play", None]) if kind is EventType.DUEL else None
        detail = (GOAL if rng.random() < 0.2 else SHOT) if kind is S else None
        events.append(make_event(i, kind, team_id=rng.choice([1, 2]), player_id=rng.randint(1, 5),
                                 location=location, possession_id=possession, period=period,
                                 outcome=outcome, shot_detail=detail))
    return events


def test_matches_reference_segmenter_on_random_streams(event_factory, reference_segmenter):
    rng = random.Random(2021)
    for _ in range(1000):
        events = _random_stream(rng, event_factory)
        chains = extract_chains(events)
        assert _indices(chains) == reference_segmenter(events)
        for chain in chains:
            assert chain.shot.event.event_type is S
            assert {a.event.team_id for a in chain.actions} == {chain.team_id}
            assert [a.k for a in chain.actions] == list(range(1, chain.length + 1))
            assert chain.ends_in_goal == chain.shot.event.shot_detail.is_goal


def test_opponent_interception_cuts_the_chain(event_factory):
    events = [
        event_factory(0, P, team_id=1),
        event_factory(1, EventType.INTERCEPTION, team_id=2),
        event_factory(2, P, team_id=1),
        event_factory(3, S, team_id=1, shot_detail=GOAL),
    ]
    chains = extract_chains(events)
    assert _indices(chains) == [[2, 3]]
    assert chains[0].length == 2
    assert label_chain(chains[0]) == 1


def test_pressure_and_receipts_are_absorbed(event_factory):
    events = [
        event_factory(0, P, team_id=1),
        event_factory(1, EventType.BALL_RECEIPT, team_id=1),
        event_factory(2, EventType.OTHER, team_id=2),
        event_factory(3, C, team_id=1),
        event_factory(4, S, team_id=1, shot_detail=SHOT),
    ]
    assert _indices(extract_chains(events)) == [[0, 3, 4]]


def test_duel_breaks_only_when_won(event_factory):
    lost = [
        event_factory(0, P, team_id=1),
        event_factory(1, EventType.DUEL, team_id=2, outcome="Lost In Play"),
        event_factory(2, S, team_id=1, shot_detail=SHOT),
    ]
    won = [
        event_factory(0, P, team_id=1),
        event_factory(1, EventType.DUEL, team_id=2, outcome="Won"),
        event_factory(2, S, team_id=1, shot_detail=SHOT),
    ]
    assert _indices(extract_chains(lost)) == [[0, 2]]
    assert _indices(extract_chains(won)) == [[2]]


def test_possession_and_period_changes_start_new_runs(event_factory):
    events = [
        event_factory(0, P, possession_id=1),
        event_factory(1, P, possession_id=2),
        event_factory(2, P, possession_id=2, period=2),
        event_factory(3, S, possession_id=2, period=2, shot_detail=SHOT),
    ]
    assert _indices(extract_chains(events)) == [[2, 3]]


def test_second_shot_starts_a_fresh_chain(event_factory):
    events = [
        event_factory(0, P),
        event_factory(1, S, shot_detail=SHOT),
        event_factory(2, C),
        event_factory(3, S, shot_detail=GOAL),
    ]
    chains = extract_chains(events)
    assert _indices(chains) == [[0, 1], [2, 3]]
    assert [c.chain_id for c in chains] == [1, 2]
    assert [c.key for c in chains] == ["1:1", "1:2"]


def test_shot_without_location_is_dropped_and_counted(event_factory):
    events = [
        event_factory(0, P),
        event_factory(1, S, location=None, shot_detail=SHOT),
        event_factory(2, S, shot_detail=SHOT),
    ]
    report = ChainReport()
    chains = extract_chains(events, report)
    assert _indices(chains) == [[2]]
    assert report.shots_seen == 2
    assert report.chains == 1
    assert report.dropped_shots == ["1#1"]


def test_shot_without_detail_still_cuts_the_run(event_factory):
    events = [
        event_factory(0, P),
        event_factory(1, P),
        event_factory(2, S, shot_detail=None),
        event_factory(3, P),
        event_factory(4, S, shot_detail=SHOT),
    ]
    report = ChainReport()
    chains = extract_chains(events, report)
    assert _indices(chains) == [[3, 4]]
    assert chains[0].length == 2
    assert report.dropped_shots == ["1#2"]


def test_no_shot_no_chain(event_factory):
    assert extract_chains([event_factory(0, P), event_factory(1, C)]) == []
    assert extract_chains([]) == []


def test_action_end_state_is_next_start(event_factory):
    events = [
        event_factory(0, P, location=(30.0, 40.0)),
        event_factory(1, C, location=(60.0, 30.0)),
        event_factory(2, S, location=(100.0, 40.0), shot_detail=SHOT),
    ]
    chain = extract_chains(events)[0]
    assert chain.actions[0].end_state == chain.actions[1].start_state
    assert chain.actions[1].end_state == chain.actions[2].start_state
    assert chain.shot.end_state == chain.shot.start_state


def test_record_round_trip(event_factory):
    events = [event_factory(0, P), event_factory(1, S, shot_detail=GOAL)]
    chain = extract_chains(events)[0]
    restored = PossessionChain.from_record(chain.to_record())
    assert restored == chain


def test_extract_all_chains_orders_by_match(event_factory):
    by_match = {
        9: [event_factory(0, S, match_id=9, shot_detail=SHOT)],
        3: [event_factory(0, S, match_id=3, shot_detail=SHOT)],
    }
    report = ChainReport()
    chains = extract_all_chains(by_match, report)
    assert [c.key for c in chains] == ["3:1", "9:1"]
    assert report.chains == 2


@pytest.mark.parametrize("scored", [True, False])
def test_label_chain(chain_factory, scored):
    chain = chain_factory([(P, 1, 50.0, 40.0), (S, 2, 100.0, 40.0)], scored=scored)
    assert label_chain(chain) == int(scored)
