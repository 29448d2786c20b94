"""Forecast scoring: rank probability score (1X2) and Brier score (AH)."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path


class Market(enum.Enum):
    ONE_X_TWO = "1x2"
    AH = "ah"


@dataclass(frozen=True)
class OutcomeObs:
    """Observed outcome of one market: index into the ordinal outcome list.

    For 1X2 the index is 0=home, 1=draw, 2=away; for AH it is 0=home,
    1=away. `voided` marks fully voided AH bets, which are excluded from
    Brier averages.
    """

    market: Market
    observed: int
    voided: bool = False

    def __post_init__(self):
        n = 3 if self.market is Market.ONE_X_TWO else 2
        if not 0 <= self.observed < n:
            raise ValueError(f"observed index {self.observed} out of range for {self.market}")
        if self.voided and self.market is not Market.AH:
            raise ValueError("only AH observations can be voided")


def rps(p: tuple[float, float, float], observed: int) -> float:
    """Rank probability score for an ordinal (home, draw, away) forecast.

    Mean squared error of the cumulative forecast against the cumulative
    one-hot outcome, normalised to [0, 1].
    """
    if abs(sum(p) - 1.0) > 1e-9:
        raise ValueError(f"1X2 probabilities must sum to 1, got {sum(p)!r}")
    if not 0 <= observed <= 2:
        raise ValueError("observed must be 0 (home), 1 (draw) or 2 (away)")
    cum_p = 0.0
    cum_o = 0.0
    total = 0.0
    for i in range(2):
        cum_p += p[i]
        cum_o += 1.0 if observed == i else 0.0
        total += (cum_p - cum_o) ** 2
    return total / 2


def brier(p_home: float, observed: int) -> float:
    """Binary Brier score (p - outcome)^2 for an AH forecast, 0=home 1=away."""
    if not 0.0 <= p_home <= 1.0:
        raise ValueError("p_home must be a probability")
    if observed not in (0, 1):
        raise ValueError("observed must be 0 (home) or 1 (away)")
    return (p_home - (1.0 if observed == 0 else 0.0)) ** 2


@dataclass(frozen=True)
class SeasonScore:
    season: str
    rps: float | None
    brier: float | None
    n_1x2: int
    n_ah: int


def season_table(forecasts, observations, seasons) -> list[SeasonScore]:
    """Per-season mean RPS/Brier plus a pooled "Overall" row.

    `forecasts`, `observations` and `seasons` are aligned sequences; a
    1X2 forecast is a (home, draw, away) triple and an AH forecast a
    single home-win probability. Voided AH observations are dropped from
    the Brier denominator. The overall row pools all matches rather than
    averaging the season means.
    """
    if not (len(forecasts) == len(observations) == len(seasons)):
        raise ValueError("forecasts, observations and seasons must be aligned")
    if not forecasts:
        raise ValueError("no observations to score")

    per_season: dict[str, dict[str, list[float]]] = {}
    for fc, obs, season in zip(forecasts, observations, seasons):
        bucket = per_season.setdefault(season, {"rps": [], "brier": []})
        if obs.market is Market.ONE_X_TWO:
            bucket["rps"].append(rps(fc, obs.observed))
        else:
            if obs.voided:
                continue
            bucket["brier"].append(brier(fc, obs.observed))

    rows = []
    all_rps: list[float] = []
    all_brier: list[float] = []
    for season in sorted(per_season):
        scores = per_season[season]
        all_rps.extend(scores["rps"])
        all_brier.extend(scores["brier"])
        rows.append(
            SeasonScore(
                season=season,
                rps=_mean_or_none(scores["rps"]),
                brier=_mean_or_none(scores["brier"]),
                n_1x2=len(scores["rps"]),
                n_ah=len(scores["brier"]),
            )
        )
    rows.append(
        SeasonScore(
            season="Overall",
            rps=_mean_or_none(all_rps),
            brier=_mean_or_none(all_brier),
            n_1x2=len(all_rps),
            n_ah=len(all_brier),
        )
    )
    return rows


def _mean_or_none(values):
    return sum(values) / len(values) if values else None


def table_to_csv(rows: list[SeasonScore], path) -> None:
    """Write a season table as `season,rps,brier,n_matches` CSV."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["season", "rps", "brier", "n_matches"])
        for row in rows:
            writer.writerow([
                row.season,
                "" if row.rps is None else repr(row.rps),
                "" if row.brier is None else repr(row.brier),
                row.n_1x2,
            ])
