"""Modified pi-ratings: per-team home/away goal-difference expectations.

Each team carries a home and an away rating. After a match the home-side
error (observed minus predicted goal difference) moves the home team's
home rating by error*lambda*k_eff, a fraction gamma of that movement
carries over to its away rating, and the away team updates with the
negated error. k_eff boosts the learning rate while teams are new
(fewer than `new_team_threshold` prior matches).

The sequential replay loop is provided by a compiled kernel when the
extension built, with a pure-Python fallback selected at import.
"""

from __future__ import annotations

import concurrent.futures
import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    from . import _replay_cy as _backend
except ImportError:  # extension not built; pure Python does the same work
    from . import _replay_py as _backend

BACKEND = _backend.BACKEND

K_RULE_BOTH_BELOW = "both_below"
K_RULE_EITHER_BELOW = "either_below"

DEFAULT_LAMBDA_GRID = tuple(i / 1000 for i in range(1, 101))
DEFAULT_GAMMA_GRID = tuple(i / 20 for i in range(21))
DEFAULT_K_GRID = tuple(range(1, 11))


def has_compiled_kernel() -> bool:
    return BACKEND == "cython"


@dataclass(frozen=True)
class RatingParams:
    """Learning parameters of the rating update."""

    lambda_: float
    gamma: float
    k: int
    new_team_threshold: int = 38
    k_rule: str = K_RULE_BOTH_BELOW

    def __post_init__(self):
        if self.lambda_ < 0:
            raise ValueError("lambda must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.k < 1 or int(self.k) != self.k:
            raise ValueError("k must be a positive integer")
        if self.k_rule not in (K_RULE_BOTH_BELOW, K_RULE_EITHER_BELOW):
            raise ValueError(f"unknown k_rule {self.k_rule!r}")


@dataclass
class TeamRating:
    home: float = 0.0
    away: float = 0.0
    played: int = 0


class RatingBook:
    """Mutable map team -> TeamRating; unknown teams materialise at 0/0."""

    def __init__(self, params: RatingParams):
        self.params = params
        self._teams: dict[str, TeamRating] = {}

    def get(self, team: str) -> TeamRating:
        rating = self._teams.get(team)
        if rating is None:
            rating = TeamRating()
            self._teams[team] = rating
        return rating

    def teams(self) -> dict[str, TeamRating]:
        return dict(self._teams)

    def predicted_gd(self, home: str, away: str) -> float:
        """Predicted goal difference: home team's H rating minus away's A."""
        return self.get(home).home - self.get(away).away

    def k_effective(self, home: str, away: str) -> float:
        p = self.params
        below_h = self.get(home).played < p.new_team_threshold
        below_a = self.get(away).played < p.new_team_threshold
        is_new = (below_h or below_a) if p.k_rule == K_RULE_EITHER_BELOW else (below_h and below_a)
        return float(p.k) if is_new else 1.0

    def eligible(self, home: str, away: str) -> bool:
        t = self.params.new_team_threshold
        return self.get(home).played >= t and self.get(away).played >= t

    def update(self, match) -> float:
        """Apply one final result; returns the home-side error e_H.

        All deltas derive from pre-match ratings, so the four updates are
        order-independent within the match.
        """
        home = self.get(match.home_team)
        away = self.get(match.away_team)
        keff = self.k_effective(match.home_team, match.away_team)
        rd = home.home - away.away
        e_h = (match.home_goals - match.away_goals) - rd
        delta_home = e_h * self.params.lambda_ * keff
        delta_away = -delta_home

        home.home += delta_home
        home.away += self.params.gamma * delta_home
        away.away += delta_away
        away.home += self.params.gamma * delta_away
        home.played += 1
        away.played += 1
        return e_h


@dataclass
class ReplayTrace:
    """Per-match replay outputs, aligned with the dataset order."""

    rd: np.ndarray
    observed_gd: np.ndarray
    error: np.ndarray
    eligible: np.ndarray

    def __len__(self):
        return len(self.rd)

    @property
    def n_eligible(self) -> int:
        return int(self.eligible.sum())


def _encode(dataset):
    team_index: dict[str, int] = {}
    for m in dataset:
        team_index.setdefault(m.home_team, len(team_index))
        team_index.setdefault(m.away_team, len(team_index))
    n = len(dataset)
    home_idx = np.empty(n, dtype=np.int64)
    away_idx = np.empty(n, dtype=np.int64)
    home_goals = np.empty(n, dtype=np.int64)
    away_goals = np.empty(n, dtype=np.int64)
    for i, m in enumerate(dataset):
        home_idx[i] = team_index[m.home_team]
        away_idx[i] = team_index[m.away_team]
        home_goals[i] = m.home_goals
        away_goals[i] = m.away_goals
    return team_index, home_idx, away_idx, home_goals, away_goals


def _run_backend(encoded, params: RatingParams):
    team_index, home_idx, away_idx, home_goals, away_goals = encoded
    return _backend.replay_encoded(
        home_idx,
        away_idx,
        home_goals,
        away_goals,
        len(team_index),
        params.lambda_,
        params.gamma,
        float(params.k),
        params.new_team_threshold,
        params.k_rule == K_RULE_EITHER_BELOW,
    )


def replay(dataset, params: RatingParams) -> tuple[RatingBook, ReplayTrace]:
    """Replay the dataset chronologically, returning final book and trace."""
    encoded = _encode(dataset)
    rd, err, elig, rh, ra, played = _run_backend(encoded, params)
    book = RatingBook(params)
    for team, idx in encoded[0].items():
        book._teams[team] = TeamRating(
            home=float(rh[idx]), away=float(ra[idx]), played=int(played[idx])
        )
    observed = encoded[3] - encoded[4]
    return book, ReplayTrace(rd=rd, observed_gd=observed, error=err, eligible=elig)


def mean_abs_error(trace: ReplayTrace) -> float:
    """Mean |e_H| over eligible matches (both teams past the threshold)."""
    if trace.n_eligible == 0:
        raise ValueError("no eligible matches in trace")
    return float(np.abs(trace.error[trace.eligible]).mean())


@dataclass(frozen=True)
class GridPoint:
    lambda_: float
    gamma: float
    k: int
    mean_abs_error: float


def grid_search(
    dataset,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    gamma_grid=DEFAULT_GAMMA_GRID,
    k_grid=DEFAULT_K_GRID,
    new_team_threshold: int = 38,
    k_rule: str = K_RULE_BOTH_BELOW,
    jobs: int = 1,
) -> tuple[RatingParams, list[GridPoint]]:
    """Exhaustive search of (lambda, gamma, k) minimising mean |e_H|.

    Ties break to the lexicographically smallest (lambda, gamma, k); the
    full error surface is returned for export/plotting. Points are
    independent, so `jobs > 1` evaluates them on a thread pool (the
    compiled kernel releases the GIL); the result is order-independent.
    """
    lambdas = sorted(set(float(v) for v in lambda_grid))
    gammas = sorted(set(float(v) for v in gamma_grid))
    ks = sorted(set(int(v) for v in k_grid))
    if not lambdas or not gammas or not ks:
        raise ValueError("parameter grids must be non-empty")

    encoded = _encode(dataset)
    combos = list(itertools.product(lambdas, gammas, ks))

    def evaluate(combo):
        lam, gam, k = combo
        params = RatingParams(lam, gam, k, new_team_threshold, k_rule)
        rd, err, elig, *_ = _run_backend(encoded, params)
        n_elig = int(elig.sum())
        if n_elig == 0:
            raise ValueError("no eligible matches; lower new_team_threshold or add data")
        mae = float(np.abs(err[elig]).mean())
        return GridPoint(lam, gam, k, mae)

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            surface = list(pool.map(evaluate, combos))
    else:
        surface = [evaluate(c) for c in combos]

    best = min(surface, key=lambda p: (p.mean_abs_error, p.lambda_, p.gamma, p.k))
    best_params = RatingParams(best.lambda_, best.gamma, best.k, new_team_threshold, k_rule)
    return best_params, surface


def surface_to_csv(surface, path) -> None:
    """Write the error surface as `lambda,gamma,k,mean_abs_error` CSV."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "gamma", "k", "mean_abs_error"])
        for point in surface:
            writer.writerow(
                [repr(point.lambda_), repr(point.gamma), point.k, repr(point.mean_abs_error)]
            )
