import datetime as dt
from pathlib import Path

import pytest

from handicap_lab.ingest import Dataset, MatchRecord
from handicap_lab.synthetic import make_league

DATA_DIR = Path(__file__).parent / "data"


def mk_match(match_id="m1", date=dt.date(2010, 8, 14), home="Alpha", away="Beta",
             home_goals=1, away_goals=0, **kwargs):
    return MatchRecord(
        match_id=match_id,
        date=date,
        season=kwargs.pop("season", "2010/11"),
        home_team=home,
        away_team=away,
        home_goals=home_goals,
        away_goals=away_goals,
        **kwargs,
    )


def mk_dataset(matches):
    return Dataset.from_matches(matches, {"test": "fixture"})


@pytest.fixture(scope="session")
def league():
    """Mid-size synthetic league shared by the slower integration tests."""
    return make_league(n_teams=12, n_seasons=4, seed=20_10)


@pytest.fixture
def data_dir():
    return DATA_DIR
