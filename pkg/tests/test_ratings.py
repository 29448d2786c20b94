import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from handicap_lab import ratings
from handicap_lab.ratings import (
    GridPoint,
    RatingBook,
    RatingParams,
    grid_search,
    mean_abs_error,
    replay,
    surface_to_csv,
)

from conftest import mk_dataset, mk_match

PAPER_PARAMS = RatingParams(lambda_=0.018, gamma=0.7, k=3)


def test_params_validation():
    with pytest.raises(ValueError):
        RatingParams(-0.01, 0.7, 3)
    with pytest.raises(ValueError):
        RatingParams(0.018, 1.5, 3)
    with pytest.raises(ValueError):
        RatingParams(0.018, 0.7, 0)
    with pytest.raises(ValueError):
        RatingParams(0.018, 0.7, 3, k_rule="sometimes")


def test_fresh_teams_predict_zero():
    book = RatingBook(PAPER_PARAMS)
    assert book.predicted_gd("Alpha", "Beta") == 0.0


def test_predicted_gd_is_home_minus_away():
    book = RatingBook(PAPER_PARAMS)
    book.get("Alpha").home = 1.2
    book.get("Beta").away = -0.5
    assert book.predicted_gd("Alpha", "Beta") == pytest.approx(1.7)


def test_hand_checked_update():
    # fresh teams, 2-0, lambda=0.018, gamma=0.7, k=3 (both new)
    book = RatingBook(PAPER_PARAMS)
    book.update(mk_match(home="X", away="Y", home_goals=2, away_goals=0))
    assert book.get("X").home == pytest.approx(0.108, abs=1e-12)
    assert book.get("X").away == pytest.approx(0.0756, abs=1e-12)
    assert book.get("Y").away == pytest.approx(-0.108, abs=1e-12)
    assert book.get("Y").home == pytest.approx(-0.0756, abs=1e-12)
    assert book.get("X").played == 1 and book.get("Y").played == 1
    # the updated home rating against a fresh side predicts 0.108
    assert book.predicted_gd("X", "Fresh") == pytest.approx(0.108, abs=1e-12)


def test_update_with_established_teams_drops_k():
    book = RatingBook(PAPER_PARAMS)
    book.get("X").played = 38
    book.get("Y").played = 38
    book.update(mk_match(home="X", away="Y", home_goals=2, away_goals=0))
    assert book.get("X").home == pytest.approx(0.036, abs=1e-12)


def test_k_rule_both_vs_either():
    both = RatingBook(RatingParams(0.018, 0.7, 3, k_rule="both_below"))
    either = RatingBook(RatingParams(0.018, 0.7, 3, k_rule="either_below"))
    for book in (both, either):
        book.get("X").played = 38  # X established, Y new
    assert both.k_effective("X", "Y") == 1.0
    assert either.k_effective("X", "Y") == 3.0


def test_zero_error_fixed_point():
    book = RatingBook(PAPER_PARAMS)
    book.get("X").home = 2.0
    book.get("X").away = 1.0
    book.get("Y").away = -1.0
    book.get("Y").home = 0.5
    # observed GD equals predicted GD (2 - (-1) = 3): nothing moves
    book.update(mk_match(home="X", away="Y", home_goals=3, away_goals=0))
    assert book.get("X").home == 2.0
    assert book.get("X").away == 1.0
    assert book.get("Y").away == -1.0
    assert book.get("Y").home == 0.5


@settings(max_examples=60, deadline=None)
@given(
    hg=st.integers(0, 8),
    ag=st.integers(0, 8),
    rxh=st.floats(-3, 3),
    rya=st.floats(-3, 3),
    lam=st.floats(0, 0.2),
    gamma=st.floats(0, 1),
)
def test_update_zero_sum_and_translation(hg, ag, rxh, rya, lam, gamma):
    params = RatingParams(lam, gamma, 3)
    book = RatingBook(params)
    book.get("X").home = rxh
    book.get("Y").away = rya
    book.update(mk_match(home="X", away="Y", home_goals=hg, away_goals=ag))

    # the applied increments are exactly +d / -d around the shared error
    delta = ((hg - ag) - (rxh - rya)) * lam * 3.0
    assert book.get("X").home == rxh + delta
    assert book.get("Y").away == rya + -delta
    # cross-ground transfers mirror exactly (measured from 0-initialised sides)
    assert book.get("X").away == gamma * delta
    assert book.get("Y").home == gamma * -delta
    assert book.get("X").away == -book.get("Y").home

    # translation covariance: adding c goals to both sides changes nothing
    shifted = RatingBook(params)
    shifted.get("X").home = rxh
    shifted.get("Y").away = rya
    shifted.update(mk_match(home="X", away="Y", home_goals=hg + 3, away_goals=ag + 3))
    assert shifted.get("X").home == book.get("X").home
    assert shifted.get("Y").away == book.get("Y").away


def test_replay_empty_dataset():
    book, trace = replay(mk_dataset([]), PAPER_PARAMS)
    assert len(trace) == 0
    assert book.teams() == {}


def test_replay_single_match():
    ds = mk_dataset([mk_match(home_goals=3, away_goals=1)])
    book, trace = replay(ds, PAPER_PARAMS)
    assert trace.rd[0] == 0.0
    assert trace.error[0] == 3 - 1
    assert not trace.eligible[0]
    assert trace.observed_gd[0] == 2


def test_replay_matches_sequential_book(league):
    params = RatingParams(0.03, 0.6, 2, new_team_threshold=10)
    book, trace = replay(league.dataset, params)
    manual = RatingBook(params)
    for i, match in enumerate(league.dataset):
        assert manual.predicted_gd(match.home_team, match.away_team) == trace.rd[i]
        assert manual.eligible(match.home_team, match.away_team) == trace.eligible[i]
        manual.update(match)
    for team, rating in manual.teams().items():
        assert book.get(team).home == rating.home
        assert book.get(team).away == rating.away
        assert book.get(team).played == rating.played


def test_replay_with_lambda_zero_errors_are_goal_differences(league):
    _, trace = replay(league.dataset, RatingParams(0.0, 0.7, 3))
    np.testing.assert_array_equal(trace.error, trace.observed_gd)
    np.testing.assert_array_equal(trace.rd, np.zeros(len(trace)))


def test_mean_abs_error():
    trace = ratings.ReplayTrace(
        rd=np.zeros(3),
        observed_gd=np.array([1, -2, 3]),
        error=np.array([1.0, -2.0, 3.0]),
        eligible=np.array([True, True, True]),
    )
    assert mean_abs_error(trace) == pytest.approx(2.0)
    trace.error[:] = 0.0
    assert mean_abs_error(trace) == 0.0
    trace.eligible[:] = False
    with pytest.raises(ValueError, match="no eligible"):
        mean_abs_error(trace)


def test_grid_search_single_point(league):
    params, surface = grid_search(
        league.dataset, [0.02], [0.5], [2], new_team_threshold=10
    )
    assert (params.lambda_, params.gamma, params.k) == (0.02, 0.5, 2)
    assert len(surface) == 1
    _, trace = replay(league.dataset, params)
    assert surface[0].mean_abs_error == pytest.approx(mean_abs_error(trace))


def test_grid_search_lambda_zero_ties_break_small(league):
    # lambda = 0 freezes ratings, so every (gamma, k) scores identically
    params, surface = grid_search(
        league.dataset, [0.0], [0.0, 0.5, 1.0], [1, 5], new_team_threshold=10
    )
    errors = {p.mean_abs_error for p in surface}
    assert len(errors) == 1
    assert (params.gamma, params.k) == (0.0, 1)


def test_grid_search_parallel_matches_serial(league):
    grids = dict(lambda_grid=[0.01, 0.02, 0.03], gamma_grid=[0.3, 0.7], k_grid=[1, 3])
    serial = grid_search(league.dataset, new_team_threshold=10, **grids)
    threaded = grid_search(league.dataset, new_team_threshold=10, jobs=4, **grids)
    assert serial[0] == threaded[0]
    assert sorted(serial[1], key=str) == sorted(threaded[1], key=str)


def test_grid_search_empty_grid(league):
    with pytest.raises(ValueError):
        grid_search(league.dataset, [], [0.5], [1])


def test_surface_csv(tmp_path):
    surface = [GridPoint(0.018, 0.7, 3, 1.2283)]
    path = tmp_path / "surface.csv"
    surface_to_csv(surface, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "lambda,gamma,k,mean_abs_error"
    assert lines[1] == "0.018,0.7,3,1.2283"


def test_eligibility_counts_prior_matches_only():
    # threshold 1: the first meeting is ineligible, the rematch eligible
    ds = mk_dataset([
        mk_match("m1", dt.date(2010, 8, 14), home="A", away="B"),
        mk_match("m2", dt.date(2010, 8, 21), home="B", away="A"),
    ])
    _, trace = replay(ds, RatingParams(0.018, 0.7, 3, new_team_threshold=1))
    assert list(trace.eligible) == [False, True]
