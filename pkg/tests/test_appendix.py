"""Replay of the two published season-2010/11 betting ledgers.

Model probabilities, odds, handicaps and results are read from the
fixture CSVs exactly as printed; the simulator must reproduce every bet
decision, every per-row return and the ledger totals (15.18 for 1X2 at
theta=10%, 8.75 for AH at theta=11%). The printed ledgers were computed
against 2-decimal implied probabilities, hence implied_dp=2.
"""

import csv
import datetime as dt

import pytest

from handicap_lab.backtest import ForecastRecord, forecast_index, simulate
from handicap_lab.ingest import Dataset, MatchRecord, season_of

RESULT_GOALS = {"1": (1, 0), "X": (0, 0), "2": (0, 1)}


def _date(cell):
    return dt.datetime.strptime(cell, "%d/%m/%Y").date()


def load_a1(path):
    matches, records, expected = [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            date = _date(row["date"])
            goals = RESULT_GOALS[row["result"]]
            match_id = f"{row['date']}_{row['home']}_{row['away']}"
            matches.append(MatchRecord(
                match_id=match_id,
                date=date,
                season=season_of(date),
                home_team=row["home"],
                away_team=row["away"],
                home_goals=goals[0],
                away_goals=goals[1],
                odds_1x2_avg=(float(row["odds1"]), float(row["oddsx"]), float(row["odds2"])),
            ))
            records.append(ForecastRecord(
                match_id=match_id,
                p_1x2=(float(row["p1"]), float(row["px"]), float(row["p2"])),
            ))
            expected.append({
                "match_id": match_id,
                "bets": {"home": int(row["bet1"]), "draw": int(row["betx"]),
                         "away": int(row["bet2"])},
                "returns": {"home": float(row["ret1"]), "draw": float(row["retx"]),
                            "away": float(row["ret2"])},
                "profit": float(row["profit"]),
            })
    return Dataset.from_matches(matches), forecast_index(records), expected


def load_a2(path):
    matches, records, expected = [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            date = _date(row["date"])
            match_id = f"{row['date']}_{row['home']}_{row['away']}"
            matches.append(MatchRecord(
                match_id=match_id,
                date=date,
                season=season_of(date),
                home_team=row["home"],
                away_team=row["away"],
                home_goals=int(row["home_goals"]),
                away_goals=int(row["away_goals"]),
                ah_line=round(float(row["ah"]) * 4),
                odds_ah_avg=(float(row["odds1"]), float(row["odds2"])),
            ))
            records.append(ForecastRecord(
                match_id=match_id,
                ah_home=float(row["p1"]),
                ah_away=float(row["p2"]),
            ))
            expected.append({
                "match_id": match_id,
                "bets": {"home": int(row["bet1"]), "away": int(row["bet2"])},
                "returns": {"home": float(row["ret1"]), "away": float(row["ret2"])},
                "profit": float(row["profit"]),
            })
    return Dataset.from_matches(matches), forecast_index(records), expected


def _rows_by_match(report):
    by_match = {}
    for r in report.rows:
        by_match.setdefault(r.match_id, {})[r.selection] = r
    return by_match


def test_table_a1_replay(data_dir):
    dataset, forecasts, expected = load_a1(data_dir / "table_a1.csv")
    report = simulate(dataset, forecasts, "1x2", "avg", 0.10, implied_dp=2)
    placed = _rows_by_match(report)

    for exp in expected:
        got = placed.get(exp["match_id"], {})
        for sel in ("home", "draw", "away"):
            should_bet = exp["bets"][sel] == 1
            assert (sel in got) == should_bet, (exp["match_id"], sel)
            if should_bet:
                assert got[sel].returned == pytest.approx(exp["returns"][sel], abs=0.005)
        row_profit = sum(r.profit for r in got.values())
        assert row_profit == pytest.approx(exp["profit"], abs=0.005)

    assert report.overall.bets == 33
    assert sum(1 for r in report.rows if r.selection == "home") == 15
    assert sum(1 for r in report.rows if r.selection == "away") == 18
    assert report.overall.returns == pytest.approx(48.18, abs=0.005)
    assert report.overall.profit == pytest.approx(15.18, abs=0.005)


def test_table_a2_replay(data_dir):
    dataset, forecasts, expected = load_a2(data_dir / "table_a2.csv")
    report = simulate(dataset, forecasts, "ah", "avg", 0.11, implied_dp=2)
    placed = _rows_by_match(report)

    for exp in expected:
        got = placed.get(exp["match_id"], {})
        for sel in ("home", "away"):
            should_bet = exp["bets"][sel] == 1
            assert (sel in got) == should_bet, (exp["match_id"], sel)
            if should_bet:
                assert got[sel].returned == pytest.approx(exp["returns"][sel], abs=0.005)
        row_profit = sum(r.profit for r in got.values())
        assert row_profit == pytest.approx(exp["profit"], abs=0.005)

    assert report.overall.bets == 43
    assert sum(1 for r in report.rows if r.selection == "home") == 20
    assert sum(1 for r in report.rows if r.selection == "away") == 23
    assert report.overall.returns == pytest.approx(51.75, abs=0.005)
    assert report.overall.profit == pytest.approx(8.75, abs=0.005)
    # the published season row: 43 bets, 28 won, ROI 20.35%
    assert report.overall.bets_won == 28
    assert report.overall.roi == pytest.approx(0.2035, abs=0.0005)
