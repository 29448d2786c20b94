"""Synthetic league generator with known team strengths.

Match stats come from the same possession -> shots -> on-target -> goals
Binomial chain the forecaster assumes, with per-team success
probabilities tied to a latent strength, so chain invariants
(goals <= shots on target <= shots) hold by construction. Odds derive
from the exact goal-difference pmf given each match's realised minutes,
plus a bookmaker margin, which also yields an omniscient forecast per
match for backtest tests.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from . import ah
from .backtest import ForecastRecord
from .ingest import Dataset, MatchRecord, season_of


@dataclass
class SyntheticLeague:
    dataset: Dataset
    true_forecasts: dict[str, ForecastRecord]
    strengths: dict[str, float]


def _chain_probs(strength: float, at_home: bool) -> tuple[float, float, float]:
    edge = 0.015 if at_home else 0.0
    shot = min(max(0.14 + 0.05 * strength + edge, 0.02), 0.45)
    on_target = min(max(0.45 + 0.06 * strength, 0.1), 0.9)
    conversion = min(max(0.28 + 0.06 * strength, 0.05), 0.8)
    return shot, on_target, conversion


def _binom_pmf(n: int, p: float, top: int) -> list[float]:
    return [math.comb(n, g) * p**g * (1.0 - p) ** (n - g) for g in range(min(n, top) + 1)]


def _gd_pmf(minutes_home: int, p_home: float, p_away: float) -> dict[int, float]:
    home = _binom_pmf(minutes_home, p_home, 20)
    away = _binom_pmf(90 - minutes_home, p_away, 20)
    pmf: dict[int, float] = {}
    for gh, ph in enumerate(home):
        for ga, pa in enumerate(away):
            pmf[gh - ga] = pmf.get(gh - ga, 0.0) + ph * pa
    return pmf


def _price(p: float, margin: float, noise: float = 0.0) -> float:
    """Decimal odds for probability p with a bookmaker margin baked in.

    `noise` perturbs the book's opinion multiplicatively, which is what
    leaves value on the table for a sharper model to find.
    """
    implied = max(p, 1e-6) * (1.0 + margin) * math.exp(noise)
    return max(1.0 / implied, 1.02)


def make_league(
    n_teams: int = 20,
    n_seasons: int = 6,
    seed: int = 0,
    start_year: int = 2006,
    with_odds: bool = True,
    odds_noise: float = 0.08,
) -> SyntheticLeague:
    """Double round-robin seasons for teams with evenly spread strengths."""
    if n_teams < 2:
        raise ValueError("need at least two teams")
    rng = np.random.default_rng(seed)
    teams = [f"Team{i + 1:02d}" for i in range(n_teams)]
    strengths = dict(zip(teams, (float(s) for s in np.linspace(-1.0, 1.0, n_teams))))

    matches = []
    forecasts: dict[str, ForecastRecord] = {}
    counter = 0
    for season_idx in range(n_seasons):
        pairings = [(h, a) for h in teams for a in teams if h != a]
        rng.shuffle(pairings)
        date0 = dt.date(start_year + season_idx, 8, 15)
        for slot, (home, away) in enumerate(pairings):
            date = date0 + dt.timedelta(days=3 * (slot // max(n_teams // 2, 1)))
            counter += 1
            match_id = f"SYN{counter:05d}"

            s_h, s_a = strengths[home], strengths[away]
            possession = float(
                np.clip(0.5 + 0.10 * (s_h - s_a) + rng.normal(0.0, 0.04), 0.15, 0.85)
            )
            minutes_home = int(np.rint(90 * possession))
            minutes_away = 90 - minutes_home

            chain_h = _chain_probs(s_h, at_home=True)
            chain_a = _chain_probs(s_a, at_home=False)
            shots_h = int(rng.binomial(minutes_home, chain_h[0]))
            sot_h = int(rng.binomial(shots_h, chain_h[1]))
            goals_h = int(rng.binomial(sot_h, chain_h[2]))
            shots_a = int(rng.binomial(minutes_away, chain_a[0]))
            sot_a = int(rng.binomial(shots_a, chain_a[1]))
            goals_a = int(rng.binomial(sot_a, chain_a[2]))

            record_kwargs = dict(
                match_id=match_id,
                date=date,
                season=season_of(date),
                home_team=home,
                away_team=away,
                home_goals=goals_h,
                away_goals=goals_a,
                home_possession=possession,
                home_shots=shots_h,
                away_shots=shots_a,
                home_sot=sot_h,
                away_sot=sot_a,
            )

            if with_odds:
                pmf = _gd_pmf(
                    minutes_home,
                    chain_h[0] * chain_h[1] * chain_h[2],
                    chain_a[0] * chain_a[1] * chain_a[2],
                )
                p_home = sum(p for gd, p in pmf.items() if gd > 0)
                p_draw = pmf.get(0, 0.0)
                p_away = sum(p for gd, p in pmf.items() if gd < 0)
                expected_gd = sum(gd * p for gd, p in pmf.items())
                line = ah.HandicapLine(int(-round(expected_gd * 4)))
                p_ah_home = ah.ah_model_prob(pmf, line, ah.Side.HOME)
                p_ah_away = ah.ah_model_prob(pmf, line, ah.Side.AWAY)

                # the book misjudges each outcome a little; max odds carry a
                # thinner margin on top of the same opinion
                wobble = rng.normal(0.0, odds_noise, 5)
                record_kwargs.update(
                    odds_1x2_avg=tuple(
                        _price(p, 0.06, w)
                        for p, w in zip((p_home, p_draw, p_away), wobble)
                    ),
                    odds_1x2_max=tuple(
                        _price(p, 0.02, w)
                        for p, w in zip((p_home, p_draw, p_away), wobble)
                    ),
                    ah_line=line.quarter_units,
                    odds_ah_avg=(_price(p_ah_home, 0.05, wobble[3]),
                                 _price(p_ah_away, 0.05, wobble[4])),
                    odds_ah_max=(_price(p_ah_home, 0.015, wobble[3]),
                                 _price(p_ah_away, 0.015, wobble[4])),
                )
                forecasts[match_id] = ForecastRecord(
                    match_id=match_id,
                    p_1x2=(p_home, p_draw, p_away),
                    ah_home=p_ah_home,
                    ah_away=p_ah_away,
                    gd_pmf=pmf,
                )
            matches.append(MatchRecord(**record_kwargs))

    return SyntheticLeague(
        dataset=Dataset.from_matches(matches, {"synthetic": f"seed={seed}"}),
        true_forecasts=forecasts,
        strengths=strengths,
    )
