"""Pi-rating driven Beta-Binomial match forecasts and betting backtests."""

from . import ah, artifacts, backtest, bn, ingest, metrics, ratings, synthetic
from .ah import AhQuote, HandicapLine, LegOutcome, Side
from .backtest import BacktestReport, BetRow, ForecastRecord
from .bn import BnParameters, MatchForecast
from .ingest import Dataset, MatchRecord
from .ratings import RatingBook, RatingParams

__version__ = "0.1.0"

__all__ = [
    "ah",
    "artifacts",
    "backtest",
    "bn",
    "ingest",
    "metrics",
    "ratings",
    "synthetic",
    "AhQuote",
    "HandicapLine",
    "LegOutcome",
    "Side",
    "BacktestReport",
    "BetRow",
    "ForecastRecord",
    "BnParameters",
    "MatchForecast",
    "Dataset",
    "MatchRecord",
    "RatingBook",
    "RatingParams",
    "__version__",
]
