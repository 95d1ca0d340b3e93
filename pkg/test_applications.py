"""Tests for symbolic team selection and the player report."""

from datetime import date

import pytest

from applications import (
    EXCLUDED,
    UNLINKED,
    check_team_allowlist,
    player_report,
    report_markdown,
    select_symbolic_team,
)
from data_ingest import PlayerProfile, PositionGroup
from errors import SelectionError
from estimators import Algorithm
from ml_core import fit_artifact
from transfer_model import TransferRow, rows_to_dataset
from valuation_engine import PlayerScore

D, M, F, G = PositionGroup.DEFENDER, PositionGroup.MIDFIELDER, PositionGroup.STRIKER, PositionGroup.GOALKEEPER


def _profile(player_id, group, name=None, team="Italy", nickname=None):
    return PlayerProfile(player_id, name or f"Player {player_id:03d}", nickname, 1, team,
                         group.value if group else None, group, [])


def _score(player_id, normalized, games=4):
    return PlayerScore(player_id, games, 1, total=normalized * games)


def _squad():
    """Six defenders, four midfielders, four strikers and a keeper."""
    players, scores = {}, []
    layout = [(D, [3.0, 2.0, 1.0, 0.0, -1.0, 0.5]), (M, [0.9, 0.8, 0.7, 0.1]),
              (F, [1.5, 1.4, 1.3, 0.2]), (G, [9.0])]
    pid = 1
    for group, values in layout:
        for value in values:
            players[pid] = _profile(pid, group)
            scores.append(_score(pid, value))
            pid += 1
    return players, scores


def test_top_players_per_group():
    players, scores = _squad()
    team = select_symbolic_team(scores, players)
    defenders = [m.normalized_score for m in team.by_group(D)]
    assert defenders == [3.0, 2.0, 1.0, 0.5]
    assert [m.normalized_score for m in team.by_group(M)] == [0.9, 0.8, 0.7]
    assert [m.normalized_score for m in team.by_group(F)] == [1.5, 1.4, 1.3]
    assert len(team.members) == 10
    assert all(m.position_group is not G for m in team.members)
    assert team.to_dict()["formation"] == {"Defender": 4, "Midfielder": 3, "Striker": 3}


def test_players_below_min_games_are_ineligible():
    players, scores = _squad()
    scores[0] = _score(1, 3.0, games=2)
    team = select_symbolic_team(scores, players, min_games=3)
    assert 1 not in [m.player_id for m in team.members]


def test_ties_prefer_more_games_then_name():
    players = {
        1: _profile(1, D, "Zed"), 2: _profile(2, D, "Abe"), 3: _profile(3, D, "Bob"),
        4: _profile(4, D, "Cid"), 5: _profile(5, D, "Dan"),
    }
    scores = [_score(1, 1.5, 5), _score(2, 1.5, 4), _score(3, 1.5, 4), _score(4, 2.0), _score(5, 0.1)]
    players.update({i: _profile(i, M) for i in range(10, 13)})
    players.update({i: _profile(i, F) for i in range(20, 23)})
    scores += [_score(i, 0.5) for i in list(range(10, 13)) + list(range(20, 23))]
    team = select_symbolic_team(scores, players)
    assert [m.name for m in team.by_group(D)] == ["Cid", "Zed", "Abe", "Bob"]


def test_not_enough_players_names_the_group():
    players, scores = _squad()
    scores = [s for s in scores if players[s.player_id].position_group is not M or s.player_id == 7]
    with pytest.raises(SelectionError, match="midfielder") as excinfo:
        select_symbolic_team(scores, players)
    assert excinfo.value.details["group"] == "Midfielder"


def test_team_allowlist():
    players, scores = _squad()
    players[1] = _profile(1, D, team="Wales")
    team = select_symbolic_team(scores, players, team_allowlist=["Italy"])
    assert 1 not in [m.player_id for m in team.members]
    with pytest.raises(SelectionError):
        select_symbolic_team(scores, players, team_allowlist=["Wales"])


def test_allowlist_names_are_checked_against_match_teams():
    teams = {"Italy", "Denmark", "Wales"}
    assert check_team_allowlist(["Italy", "Wales"], teams) == []
    assert check_team_allowlist(["Italy", "Atlantis"], teams) == ["Atlantis"]
    assert check_team_allowlist([], teams) == []
    with pytest.raises(SelectionError) as excinfo:
        check_team_allowlist(["Atlantis", "Lilliput"], teams)
    assert excinfo.value.details["unknown"] == ["Atlantis", "Lilliput"]


def test_selection_survives_positive_scaling():
    players, scores = _squad()
    scaled = [_score(s.player_id, s.normalized * 2.5) for s in scores]
    original = [m.player_id for m in select_symbolic_team(scores, players).members]
    assert [m.player_id for m in select_symbolic_team(scaled, players).members] == original


def test_markdown_lists_every_member():
    players, scores = _squad()
    text = select_symbolic_team(scores, players).to_markdown()
    assert text.count("\n") == 12


def _transfer_row(player_id, change):
    return TransferRow(player_id, 1000 + player_id, 0.4, M, 4, 4, 25, 10_000_000, 10_000_000 + change,
                       date(2021, 5, 1), date(2021, 9, 1))


def test_player_report_rows():
    players = {
        5: _profile(5, M, "Jorge Luiz Frello Filho", nickname="Jorginho"),
        6: _profile(6, F, "Patrik Schick", team="Czech Republic"),
        7: _profile(7, D, "Joakim Mæhle", team="Denmark"),
    }
    scores = [_score(5, 0.4), _score(6, 0.3), _score(7, 0.2)]
    rows = [_transfer_row(5, 2_000_000), _transfer_row(6, -1_000_000), _transfer_row(9, 0)]
    model = fit_artifact(Algorithm.DECISION_TREE, "regress", rows_to_dataset(rows), {"max_depth": 0}, {}, seed=0)

    report = player_report(["jorginho", "Joakim Maehle", "joakim mæhle", "6", "Nobody"], scores, players,
                           model, rows[:2])
    by_request = {r.requested: r for r in report}
    ok = by_request["jorginho"]
    assert (ok.name, ok.status, ok.realized_change) == ("Jorginho", "ok", pytest.approx(2.0))
    assert ok.predicted_change == pytest.approx(1.0 / 3.0)
    assert by_request["6"].name == "Patrik Schick"
    assert by_request["joakim mæhle"].status == UNLINKED
    assert by_request["joakim mæhle"].predicted_change is None
    assert by_request["joakim mæhle"].score == pytest.approx(0.2)
    assert by_request["Joakim Maehle"].status == "unknown_player"
    assert by_request["Nobody"].status == "unknown_player"

    text = report_markdown(report)
    assert "(unlinked)" in text
    assert text.count("\n") == 2 + len(report)


def test_empty_request_gives_empty_report():
    assert player_report([], [], {}, None, []) == []


def test_linked_player_without_transfer_row_is_excluded_not_unlinked():
    players = {
        7: _profile(7, D, "Joakim Mæhle", team="Denmark"),
        8: _profile(8, D, "Simon Kjær", team="Denmark"),
    }
    scores = [_score(7, 0.2), _score(8, 0.1)]
    report = player_report(["joakim mæhle", "Simon Kjær"], scores, players, None, [], links={7: 9007})
    assert [r.status for r in report] == [EXCLUDED, UNLINKED]
    assert all(r.predicted_change is None and r.realized_change is None for r in report)
    assert "(excluded)" in report_markdown(report)
