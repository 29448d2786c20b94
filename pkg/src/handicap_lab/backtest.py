"""Fixed-stake value-betting simulation over discrepancy thresholds.

A bet is placed on any outcome whose model probability exceeds the
bookmaker's implied probability (1/odds) by at least theta. 1X2 bets
settle on the final result, AH bets through the exact settlement rules
in :mod:`handicap_lab.ah` at the single line recorded for the match.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from . import ah
from .errors import DataError

MARKET_1X2 = "1x2"
MARKET_AH = "ah"
ODDS_AVG = "avg"
ODDS_MAX = "max"

DEFAULT_THETA_GRID = tuple(i / 100 for i in range(26))

# Thresholds and probabilities are decimal quantities; comparing binary
# floats at the boundary (e.g. 0.5 - 0.4 >= 0.1) needs this slack.
DECISION_EPS = 1e-12

_1X2_KEYS = ("home", "draw", "away")


@dataclass(frozen=True)
class ForecastRecord:
    """Per-match model output consumed by the simulator.

    `p_1x2` is the (home, draw, away) distribution; `ah_home`/`ah_away`
    the model probabilities for each side of the recorded handicap line.
    Either market may be absent.
    """

    match_id: str
    p_1x2: tuple[float, float, float] | None = None
    ah_home: float | None = None
    ah_away: float | None = None
    gd_pmf: dict[int, float] | None = None
    rd: float | None = None
    level: int | None = None
    sample_count: int | None = None
    seed: int | None = None


def forecast_index(records) -> dict[str, ForecastRecord]:
    return {r.match_id: r for r in records}


def decide(model_p: float, odds: float, theta: float, implied_dp: int | None = None) -> bool:
    """Place a bet iff model_p - 1/odds >= theta, requiring a strictly
    positive discrepancy at theta = 0.

    `implied_dp` rounds the implied probability to that many decimals
    first; the bundled published-ledger fixtures were computed from
    2-decimal implied probabilities.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must be in [0, 1]")
    implied = ah.implied_prob(odds)
    if implied_dp is not None:
        implied = round(implied, implied_dp)
    discrepancy = model_p - implied
    return discrepancy >= theta - DECISION_EPS and discrepancy > DECISION_EPS


@dataclass(frozen=True)
class BetRow:
    match_id: str
    match_index: int
    date: object
    season: str
    market: str
    selection: str
    model_p: float
    odds: float
    discrepancy: float
    stake: float
    returned: float

    @property
    def profit(self) -> float:
        return self.returned - self.stake

    @property
    def won(self) -> bool:
        """Any money back counts as won, the convention of the published
        ledgers (voided stakes and quarter-line half-losses included)."""
        return self.returned > 0.0


@dataclass(frozen=True)
class Aggregate:
    bets: int
    bets_won: int
    mean_odds: float | None
    win_rate: float | None
    returns: float
    profit: float
    roi: float | None


def _aggregate(rows, stake: float) -> Aggregate:
    bets = len(rows)
    if bets == 0:
        return Aggregate(0, 0, None, None, 0.0, 0.0, None)
    won = sum(1 for r in rows if r.won)
    returns = sum(r.returned for r in rows)
    staked = bets * stake
    profit = returns - staked
    return Aggregate(
        bets=bets,
        bets_won=won,
        mean_odds=sum(r.odds for r in rows) / bets,
        win_rate=won / bets,
        returns=returns,
        profit=profit,
        roi=profit / staked,
    )


@dataclass(frozen=True)
class CumulativePoint:
    match_index: int
    date: object
    cum_profit: float


@dataclass
class BacktestReport:
    market: str
    odds_source: str
    theta: float
    stake: float
    rows: list[BetRow]
    overall: Aggregate = field(init=False)
    by_season: dict[str, Aggregate] = field(init=False)
    cumulative: list[CumulativePoint] = field(init=False)

    def __post_init__(self):
        self.overall = _aggregate(self.rows, self.stake)
        seasons: dict[str, list[BetRow]] = {}
        for row in self.rows:
            seasons.setdefault(row.season, []).append(row)
        self.by_season = {s: _aggregate(r, self.stake) for s, r in sorted(seasons.items())}
        self.cumulative = cumulative_series(self.rows)


def cumulative_series(rows) -> list[CumulativePoint]:
    """Cumulative profit after each match that carried at least one bet."""
    points: list[CumulativePoint] = []
    total = 0.0
    current: CumulativePoint | None = None
    for row in rows:
        total += row.profit
        if current is not None and current.match_index == row.match_index:
            points[-1] = CumulativePoint(row.match_index, row.date, total)
        else:
            points.append(CumulativePoint(row.match_index, row.date, total))
        current = points[-1]
    return points


def _match_odds(match, market: str, odds_source: str):
    if market == MARKET_1X2:
        return match.odds_1x2_avg if odds_source == ODDS_AVG else match.odds_1x2_max
    return match.odds_ah_avg if odds_source == ODDS_AVG else match.odds_ah_max


def simulate(
    dataset,
    forecasts: dict[str, ForecastRecord],
    market: str,
    odds_source: str,
    theta: float,
    stake: float = 1.0,
    implied_dp: int | None = None,
    best_outcome_only: bool = False,
) -> BacktestReport:
    """Run the threshold strategy over every match with odds and a forecast.

    Every outcome of a match is evaluated independently (the overround
    makes simultaneous value on two outcomes rare); `best_outcome_only`
    restricts to the single highest-discrepancy qualifying outcome.
    """
    if market not in (MARKET_1X2, MARKET_AH):
        raise ValueError(f"unknown market {market!r}")
    if odds_source not in (ODDS_AVG, ODDS_MAX):
        raise ValueError(f"unknown odds source {odds_source!r}")

    rows: list[BetRow] = []
    for index, match in enumerate(dataset):
        fc = forecasts.get(match.match_id)
        if fc is None:
            continue
        odds = _match_odds(match, market, odds_source)
        if odds is None:
            continue

        if market == MARKET_1X2:
            if fc.p_1x2 is None:
                continue
            probs = fc.p_1x2
            _check_overround_discrepancies(match, probs, odds)
            gd = match.goal_difference
            observed = 0 if gd > 0 else (1 if gd == 0 else 2)
            candidates = []
            for i, key in enumerate(_1X2_KEYS):
                if decide(probs[i], odds[i], theta, implied_dp):
                    returned = odds[i] * stake if observed == i else 0.0
                    candidates.append((probs[i] - 1.0 / odds[i], key, probs[i], odds[i], returned))
        else:
            if match.ah_line is None or fc.ah_home is None or fc.ah_away is None:
                continue
            line = ah.HandicapLine(match.ah_line)
            gd = match.goal_difference
            candidates = []
            for side, model_p, side_odds in (
                (ah.Side.HOME, fc.ah_home, odds[0]),
                (ah.Side.AWAY, fc.ah_away, odds[1]),
            ):
                if decide(model_p, side_odds, theta, implied_dp):
                    returned = ah.settle_bet(gd, line, side, stake, side_odds)
                    candidates.append(
                        (model_p - 1.0 / side_odds, side.value, model_p, side_odds, returned)
                    )

        if best_outcome_only and len(candidates) > 1:
            candidates = [max(candidates, key=lambda c: c[0])]
        for discrepancy, selection, model_p, sel_odds, returned in candidates:
            rows.append(
                BetRow(
                    match_id=match.match_id,
                    match_index=index,
                    date=match.date,
                    season=match.season,
                    market=market,
                    selection=selection,
                    model_p=model_p,
                    odds=sel_odds,
                    discrepancy=discrepancy,
                    stake=stake,
                    returned=returned,
                )
            )
    return BacktestReport(
        market=market, odds_source=odds_source, theta=theta, stake=stake, rows=rows
    )


def _check_overround_discrepancies(match, probs, odds):
    # With an overround and normalised model probabilities, the summed
    # discrepancy is 1 - sum(1/odds) < 0, so some outcome must be value-free.
    implied_total = sum(1.0 / o for o in odds)
    if implied_total > 1.0 and abs(sum(probs) - 1.0) <= 1e-9:
        worst = min(p - 1.0 / o for p, o in zip(probs, odds))
        if worst > 0:
            raise DataError(
                f"match {match.match_id}: positive discrepancy on every outcome "
                "despite overround; model probabilities are inconsistent"
            )


def sweep_theta(
    dataset,
    forecasts,
    market: str,
    odds_source: str,
    theta_grid=DEFAULT_THETA_GRID,
    stake: float = 1.0,
    implied_dp: int | None = None,
    best_outcome_only: bool = False,
) -> list[BacktestReport]:
    """One simulation per threshold, ascending; bet counts are
    non-increasing in theta."""
    thetas = sorted(set(float(t) for t in theta_grid))
    if any(not 0.0 <= t <= 1.0 for t in thetas):
        raise ValueError("theta grid must lie within [0, 1]")
    return [
        simulate(dataset, forecasts, market, odds_source, t, stake, implied_dp, best_outcome_only)
        for t in thetas
    ]


def _objective(agg: Aggregate, objective: str) -> float:
    if objective == "roi":
        return agg.roi if agg.roi is not None else float("-inf")
    if objective == "profit":
        return agg.profit
    raise ValueError(f"unknown objective {objective!r}")


@dataclass
class SeasonOptimization:
    """Per-season optimal thresholds plus the pooled ledger of all
    selected bets."""

    objective: str
    per_season: dict[str, tuple[float, Aggregate]]
    excluded: list[str]
    pooled_rows: list[BetRow]
    overall: Aggregate
    overall_theta: float | None


def optimize_theta(
    reports: list[BacktestReport], objective: str = "roi", min_bets: int = 30
) -> SeasonOptimization:
    """Pick, per season, the theta maximising the objective among thetas
    with at least `min_bets` bets that season; ties go to the smallest
    theta. The overall row pools the selected seasons' ledgers, with the
    overall theta reported as the bet-weighted mean of the selections.
    """
    reports = sorted(reports, key=lambda r: r.theta)
    if not reports:
        raise ValueError("no reports to optimise over")
    stake = reports[0].stake

    seasons = sorted({s for r in reports for s in r.by_season})
    per_season: dict[str, tuple[float, Aggregate]] = {}
    excluded: list[str] = []
    pooled_rows: list[BetRow] = []
    for season in seasons:
        best = None
        for report in reports:
            agg = report.by_season.get(season)
            if agg is None or agg.bets < min_bets:
                continue
            score = _objective(agg, objective)
            if best is None or score > best[0]:
                best = (score, report.theta, agg, report)
        if best is None:
            excluded.append(season)
            continue
        _, theta, agg, report = best
        per_season[season] = (theta, agg)
        pooled_rows.extend(r for r in report.rows if r.season == season)

    pooled_rows.sort(key=lambda r: (r.match_index, r.selection))
    overall = _aggregate(pooled_rows, stake)
    if overall.bets:
        overall_theta = (
            sum(theta * agg.bets for theta, agg in per_season.values()) / overall.bets
        )
    else:
        overall_theta = None
    return SeasonOptimization(
        objective=objective,
        per_season=per_season,
        excluded=excluded,
        pooled_rows=pooled_rows,
        overall=overall,
        overall_theta=overall_theta,
    )


def optimize_theta_static(
    reports: list[BacktestReport], objective: str = "roi", min_bets: int = 100
) -> BacktestReport:
    """Single best theta across the whole period (ties to the smallest)."""
    best = None
    for report in sorted(reports, key=lambda r: r.theta):
        if report.overall.bets < min_bets:
            continue
        score = _objective(report.overall, objective)
        if best is None or score > best[0]:
            best = (score, report)
    if best is None:
        raise ValueError(f"no theta produced at least {min_bets} bets")
    return best[1]


def stake_match(
    ah_series: list[CumulativePoint], onextwo_series: list[CumulativePoint]
) -> tuple[float, list[CumulativePoint]]:
    """Scale factor making the AH series' final profit match the 1X2 one,
    plus the scaled AH series (profit is linear in stake)."""
    if not ah_series or not onextwo_series:
        raise ValueError("both cumulative series must be non-empty")
    final_ah = ah_series[-1].cum_profit
    if final_ah <= 0:
        raise ValueError("AH final profit must be positive to match stakes")
    factor = onextwo_series[-1].cum_profit / final_ah
    scaled = [
        CumulativePoint(p.match_index, p.date, factor * p.cum_profit) for p in ah_series
    ]
    return factor, scaled


# ---------------------------------------------------------------------------
# CSV exports mirroring the published table layouts
# ---------------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else value


def sweep_to_csv(reports: list[BacktestReport], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["theta", "bets", "bets_won", "mean_odds", "win_rate", "returns", "profit", "roi"]
        )
        for r in sorted(reports, key=lambda r: r.theta):
            a = r.overall
            writer.writerow(
                [repr(r.theta), a.bets, a.bets_won, _fmt(a.mean_odds), _fmt(a.win_rate),
                 _fmt(a.returns), _fmt(a.profit), _fmt(a.roi)]
            )


def season_optimization_to_csv(opt: SeasonOptimization, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["season", "theta", "bets", "bets_won", "mean_odds", "win_rate",
             "returns", "profit", "roi"]
        )
        for season, (theta, a) in sorted(opt.per_season.items()):
            writer.writerow(
                [season, repr(theta), a.bets, a.bets_won, _fmt(a.mean_odds),
                 _fmt(a.win_rate), _fmt(a.returns), _fmt(a.profit), _fmt(a.roi)]
            )
        a = opt.overall
        writer.writerow(
            ["Overall", _fmt(opt.overall_theta), a.bets, a.bets_won, _fmt(a.mean_odds),
             _fmt(a.win_rate), _fmt(a.returns), _fmt(a.profit), _fmt(a.roi)]
        )


def cumulative_to_csv(series_by_scenario: dict[str, list[CumulativePoint]], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["match_index", "date", "scenario", "cum_profit"])
        for scenario, series in series_by_scenario.items():
            for point in series:
                writer.writerow(
                    [point.match_index, point.date, scenario, repr(point.cum_profit)]
                )
