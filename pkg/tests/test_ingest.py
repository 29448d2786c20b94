import datetime as dt

import pytest

from handicap_lab.errors import DataError
from handicap_lab.ingest import (
    Dataset,
    merge_possession,
    parse_match_csv,
    season_of,
)

from conftest import mk_match

OLD_ERA_CSV = """\
Div,Date,HomeTeam,AwayTeam,FTHG,FTAG,HS,AS,HST,AST,BbAvH,BbAvD,BbAvA,BbMxH,BbMxD,BbMxA,BbAHh,BbAvAHH,BbAvAHA,BbMxAHH,BbMxAHA
E0,21/04/2019,Arsenal,Crystal Palace,2,3,12,9,6,5,1.54,4.44,6.03,1.60,4.60,6.35,-1,1.87,1.99,1.92,2.04
E0,12/05/2019,Liverpool,Wolves,2,0,15,8,7,3,1.30,5.62,10.17,1.35,5.90,11.0,-1.5,1.91,1.95,1.96,2.00
"""

NEW_ERA_CSV = """\
Date,HomeTeam,AwayTeam,FTHG,FTAG,AvgH,AvgD,AvgA,MaxH,MaxD,MaxA,AHh,AvgAHH,AvgAHA,MaxAHH,MaxAHA
12/05/19,Fulham,Newcastle,0,4,2.50,3.53,2.78,2.60,3.70,2.90,-0.25,2.15,1.75,2.20,1.80
"""


def test_parse_old_era_columns(tmp_path):
    path = tmp_path / "old.csv"
    path.write_text(OLD_ERA_CSV)
    records = parse_match_csv(path)
    assert len(records) == 2
    first = records[0]
    assert first.date == dt.date(2019, 4, 21)
    assert first.season == "2018/19"
    assert (first.home_goals, first.away_goals) == (2, 3)
    assert first.ah_line == -4
    assert first.odds_ah_avg == (1.87, 1.99)
    assert first.odds_1x2_avg == (1.54, 4.44, 6.03)
    assert first.odds_1x2_max == (1.60, 4.60, 6.35)
    assert first.home_shots == 12 and first.home_sot == 6


def test_parse_new_era_columns_and_two_digit_year(tmp_path):
    path = tmp_path / "new.csv"
    path.write_text(NEW_ERA_CSV)
    (record,) = parse_match_csv(path)
    assert record.date == dt.date(2019, 5, 12)
    assert record.ah_line == -1  # -0.25 in quarter units
    assert record.odds_ah_avg == (2.15, 1.75)
    assert record.odds_ah_max == (2.20, 1.80)


def test_parse_missing_optional_columns(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("Date,HomeTeam,AwayTeam,FTHG,FTAG\n14/08/93,Alpha,Beta,3,0\n")
    (record,) = parse_match_csv(path)
    assert record.season == "1993/94"
    assert record.home_shots is None
    assert record.odds_1x2_avg is None
    assert record.ah_line is None


def test_parse_empty_odds_cells_accepted(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(
        "Date,HomeTeam,AwayTeam,FTHG,FTAG,AvgH,AvgD,AvgA\n01/09/2010,Alpha,Beta,1,1,,,\n"
    )
    (record,) = parse_match_csv(path)
    assert record.odds_1x2_avg is None


def test_parse_missing_mandatory_column(tmp_path):
    path = tmp_path / "broken.csv"
    path.write_text("Date,HomeTeam,FTHG,FTAG\n14/08/2010,Alpha,1,0\n")
    with pytest.raises(DataError, match="away_team"):
        parse_match_csv(path)


def test_parse_reports_row_number(tmp_path):
    path = tmp_path / "badrow.csv"
    path.write_text(
        "Date,HomeTeam,AwayTeam,FTHG,FTAG\n"
        "14/08/2010,Alpha,Beta,1,0\n"
        "15/08/2010,Gamma,Delta,x,0\n"
    )
    with pytest.raises(DataError, match="row 3"):
        parse_match_csv(path)


def test_parse_sot_exceeding_shots_names_row(tmp_path):
    path = tmp_path / "sot.csv"
    path.write_text(
        "Date,HomeTeam,AwayTeam,FTHG,FTAG,HS,AS,HST,AST\n"
        "14/08/2010,Alpha,Beta,1,0,5,4,9,1\n"
    )
    with pytest.raises(DataError, match="row 2"):
        parse_match_csv(path)


def test_parse_unreadable_file(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        parse_match_csv(tmp_path / "missing.csv")


def test_parse_custom_column_map(tmp_path):
    path = tmp_path / "custom.csv"
    path.write_text(
        "Kickoff,Hosts,Visitors,GoalsH,GoalsA\n14/08/2010,Alpha,Beta,2,1\n"
    )
    column_map = {
        "date": ("Kickoff",),
        "home_team": ("Hosts",),
        "away_team": ("Visitors",),
        "home_goals": ("GoalsH",),
        "away_goals": ("GoalsA",),
    }
    (record,) = parse_match_csv(path, column_map)
    assert record.home_team == "Alpha"
    assert (record.home_goals, record.away_goals) == (2, 1)


def test_parse_ignores_unknown_columns(tmp_path):
    path = tmp_path / "extra.csv"
    path.write_text(
        "Date,HomeTeam,AwayTeam,FTHG,FTAG,Referee,Attendance\n"
        "14/08/2010,Alpha,Beta,1,0,M Dean,30210\n"
    )
    (record,) = parse_match_csv(path)
    assert record.match_id == "2010-08-14_Alpha_Beta"


def test_parse_is_deterministic(tmp_path):
    from handicap_lab.artifacts import artifact_digest
    from handicap_lab.ingest import file_digest

    path = tmp_path / "det.csv"
    path.write_text(OLD_ERA_CSV)
    assert parse_match_csv(path) == parse_match_csv(path)
    # same bytes -> same dataset digest
    mk = lambda: Dataset.from_matches(parse_match_csv(path),
                                      {"det.csv": file_digest(path)})
    assert artifact_digest(mk()) == artifact_digest(mk())


def test_season_of_window():
    assert season_of(dt.date(2010, 8, 1)) == "2010/11"
    assert season_of(dt.date(2011, 7, 31)) == "2010/11"
    assert season_of(dt.date(2011, 8, 1)) == "2011/12"
    assert season_of(dt.date(1999, 9, 1)) == "1999/00"


def test_record_invariants():
    with pytest.raises(DataError, match="exceed shots"):
        mk_match(home_shots=5, home_sot=7)
    with pytest.raises(DataError, match="exceed shots on target"):
        mk_match(home_goals=3, home_sot=2, home_shots=8)
    with pytest.raises(DataError, match="odds"):
        mk_match(odds_1x2_avg=(1.0, 3.0, 4.0))
    with pytest.raises(DataError, match="possession"):
        mk_match(home_possession=1.2)
    with pytest.raises(DataError, match="plays itself"):
        mk_match(home="Alpha", away="Alpha")


def test_dataset_validation():
    a = mk_match("a", dt.date(2010, 8, 14))
    b = mk_match("b", dt.date(2010, 8, 15), home="Gamma", away="Delta")
    ds = Dataset.from_matches([b, a])
    assert [m.match_id for m in ds] == ["a", "b"]

    with pytest.raises(DataError, match="duplicate"):
        Dataset.from_matches([a, mk_match("a", dt.date(2010, 9, 1))])
    with pytest.raises(DataError, match="canonical order"):
        Dataset(matches=(b, a), provenance={})
    # same date, match_id tie-break violated
    c = mk_match("c", dt.date(2010, 8, 14), home="E", away="F")
    with pytest.raises(DataError, match="canonical order"):
        Dataset(matches=(c, a), provenance={})


def test_dataset_sorts_same_date_by_match_id():
    rows = [
        mk_match("z", dt.date(2010, 8, 14), home="A1", away="B1"),
        mk_match("a", dt.date(2010, 8, 14), home="A2", away="B2"),
    ]
    ds = Dataset.from_matches(rows)
    assert [m.match_id for m in ds] == ["a", "z"]


SIDECAR = """\
date,home_team,away_team,home_possession_pct
14/08/2010,Alpha,Beta,55
14/08/2010,Nobody,Else,60
"""


def test_merge_possession(tmp_path):
    sidecar = tmp_path / "pos.csv"
    sidecar.write_text(SIDECAR)
    matches = [mk_match()]
    merged, unmatched = merge_possession(matches, sidecar)
    assert merged[0].home_possession == pytest.approx(0.55)
    assert len(unmatched) == 1
    assert unmatched[0]["home_team"] == "Nobody"

    # idempotent: applying the sidecar again changes nothing
    again, _ = merge_possession(merged, sidecar)
    assert again == merged


def test_merge_possession_range_error(tmp_path):
    sidecar = tmp_path / "pos.csv"
    sidecar.write_text("date,home_team,away_team,home_possession_pct\n14/08/2010,Alpha,Beta,120\n")
    with pytest.raises(DataError, match=r"outside \[0, 100\]"):
        merge_possession([mk_match()], sidecar)


def test_merge_possession_ambiguous_key(tmp_path):
    sidecar = tmp_path / "pos.csv"
    sidecar.write_text("date,home_team,away_team,home_possession_pct\n14/08/2010,Alpha,Beta,50\n")
    twins = [mk_match("m1"), mk_match("m2")]
    with pytest.raises(DataError, match="ambiguous"):
        merge_possession(twins, sidecar)


def test_merge_possession_missing_columns(tmp_path):
    sidecar = tmp_path / "pos.csv"
    sidecar.write_text("date,team,pct\n14/08/2010,Alpha,55\n")
    with pytest.raises(DataError, match="sidecar must have columns"):
        merge_possession([mk_match()], sidecar)
