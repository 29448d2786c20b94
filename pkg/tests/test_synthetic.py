from handicap_lab.synthetic import make_league


def test_league_is_deterministic():
    a = make_league(n_teams=6, n_seasons=2, seed=5)
    b = make_league(n_teams=6, n_seasons=2, seed=5)
    assert a.dataset == b.dataset
    assert make_league(n_teams=6, n_seasons=2, seed=6).dataset != a.dataset


def test_league_shape_and_invariants():
    league = make_league(n_teams=6, n_seasons=2, seed=5)
    assert len(league.dataset) == 6 * 5 * 2
    for m in league.dataset:
        assert m.home_sot <= m.home_shots
        assert m.home_goals <= m.home_sot
        assert 0 < m.home_possession < 1
        assert all(o > 1 for o in m.odds_1x2_avg + m.odds_1x2_max)
        assert all(mx >= av for mx, av in zip(m.odds_1x2_max, m.odds_1x2_avg))
        fc = league.true_forecasts[m.match_id]
        assert abs(sum(fc.p_1x2) - 1) < 1e-9
        assert abs(sum(fc.gd_pmf.values()) - 1) < 1e-6


def test_stronger_teams_win_more():
    league = make_league(n_teams=10, n_seasons=4, seed=9)
    strongest = max(league.strengths, key=league.strengths.get)
    weakest = min(league.strengths, key=league.strengths.get)
    table = {t: 0 for t in league.strengths}
    for m in league.dataset:
        gd = m.goal_difference
        if gd > 0:
            table[m.home_team] += 3
        elif gd < 0:
            table[m.away_team] += 3
        else:
            table[m.home_team] += 1
            table[m.away_team] += 1
    assert table[strongest] > table[weakest]


def test_with_odds_false_skips_markets():
    league = make_league(n_teams=4, n_seasons=1, seed=1, with_odds=False)
    assert league.true_forecasts == {}
    assert all(m.odds_1x2_avg is None and m.ah_line is None for m in league.dataset)
