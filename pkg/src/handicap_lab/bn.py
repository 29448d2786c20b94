"""Hybrid Beta-Binomial network: fit per rating-difference level, forecast by
forward Monte Carlo.

The chain per side is possession -> shots -> shots on target -> goals,
each stage a Binomial whose success probability has a Beta prior pooled
from all matches in the same rating-difference level. Forecasts are drawn
with a seeded generator; an exact enumeration oracle covers the
point-mass case for verification.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import ah

log = logging.getLogger(__name__)

N_LEVELS = 23
GD_MIN, GD_MAX = -15, 15

# Lower bounds of levels 1..22, descending; level 23 is unbounded below.
# Levels 2..22 each span 0.165 goals.
LEVEL_LOWER_BOUNDS = tuple((2095 - 165 * i) / 1000 for i in range(22))
_ASCENDING_BOUNDS = np.array(LEVEL_LOWER_BOUNDS[::-1])


def assign_rdl(rd: float) -> int:
    """Hard assignment of a rating difference to its level (1..23).

    Intervals are closed below and open above, so a boundary value lands
    on the higher-RD (lower-numbered) level.
    """
    if not math.isfinite(rd):
        raise ValueError(f"rating difference must be finite, got {rd!r}")
    return int(N_LEVELS - np.searchsorted(_ASCENDING_BOUNDS, rd, side="right"))


def level_bounds(level: int) -> tuple[float, float]:
    """(lower, upper) bounds of a level; +/-inf at the extremes."""
    if not 1 <= level <= N_LEVELS:
        raise ValueError(f"level must be 1..{N_LEVELS}")
    upper = math.inf if level == 1 else LEVEL_LOWER_BOUNDS[level - 2]
    lower = -math.inf if level == N_LEVELS else LEVEL_LOWER_BOUNDS[level - 1]
    return lower, upper


@dataclass
class RdlTable:
    """The 23 predetermined rating-difference levels with support counts."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros(N_LEVELS, dtype=np.int64))

    def bounds(self, level: int) -> tuple[float, float]:
        return level_bounds(level)

    def low_support_levels(self, min_count: int = 50) -> list[int]:
        return [i + 1 for i in range(N_LEVELS) if 0 < self.counts[i] < min_count]


_BETA_FIELDS = ("poss_a", "poss_b", "shot_a", "shot_b", "sot_a", "sot_b", "goal_a", "goal_b")


@dataclass
class SideParams:
    """Per-level Beta parameters for one side plus the level RD gaussian.

    Arrays are indexed by level-1. Beta parameters are stored after
    additive smoothing; rd_mu/rd_var are NaN where a level lacks the two
    data points a variance needs.
    """

    poss_a: np.ndarray
    poss_b: np.ndarray
    shot_a: np.ndarray
    shot_b: np.ndarray
    sot_a: np.ndarray
    sot_b: np.ndarray
    goal_a: np.ndarray
    goal_b: np.ndarray
    rd_mu: np.ndarray
    rd_var: np.ndarray
    count: np.ndarray

    def validate_level(self, level: int):
        """A level is only usable if every Beta parameter is positive;
        unsupported levels without smoothing fail here, at query time."""
        li = level - 1
        for name in _BETA_FIELDS:
            if getattr(self, name)[li] <= 0:
                raise ValueError(
                    f"level {level} has non-positive Beta parameter {name} "
                    "(no support and no smoothing)"
                )


@dataclass(frozen=True)
class ChainProbs:
    """Point-mass probabilities for one side's shot chain (test hook)."""

    shot_rate: float
    on_target: float
    conversion: float

    def __post_init__(self):
        for name in ("shot_rate", "on_target", "conversion"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability, got {p}")

    @property
    def composite(self) -> float:
        return self.shot_rate * self.on_target * self.conversion


@dataclass(frozen=True)
class PointMass:
    """Degenerate parameterisation: every chain probability is a constant."""

    possession: float
    home: ChainProbs
    away: ChainProbs

    def __post_init__(self):
        if not 0.0 <= self.possession <= 1.0:
            raise ValueError("possession must be a probability")


@dataclass(frozen=True)
class FitConfig:
    smoothing: float = 0.5
    minutes_per_match: int = 90


@dataclass
class BnParameters:
    rdl: RdlTable
    home: SideParams
    away: SideParams
    fit_config: FitConfig = FitConfig()
    fixed: PointMass | None = None

    @classmethod
    def point_mass(cls, pm: PointMass) -> "BnParameters":
        empty = _empty_side()
        return cls(rdl=RdlTable(), home=empty, away=_empty_side(), fixed=pm)

    def side(self, name: str) -> SideParams:
        return self.home if name == "home" else self.away


def _empty_side() -> SideParams:
    z = lambda: np.full(N_LEVELS, 0.5)
    nan = lambda: np.full(N_LEVELS, np.nan)
    return SideParams(
        poss_a=z(), poss_b=z(), shot_a=z(), shot_b=z(), sot_a=z(), sot_b=z(),
        goal_a=z(), goal_b=z(), rd_mu=nan(), rd_var=nan(),
        count=np.zeros(N_LEVELS, dtype=np.int64),
    )


def _has_fit_stats(match) -> bool:
    return (
        match.home_possession is not None
        and match.home_shots is not None
        and match.away_shots is not None
        and match.home_sot is not None
        and match.away_sot is not None
    )


class BnFitter:
    """Sufficient-statistic accumulator with cheap leave-one-out refits.

    Pools minutes/shots/goals per rating-difference level over eligible
    matches carrying full stats; `params(exclude=...)` subtracts a single
    match's contribution before smoothing, which is all LOOCV needs.
    """

    def __init__(self, dataset, trace, config: FitConfig = FitConfig()):
        if len(trace) != len(dataset):
            raise ValueError("trace is not aligned with the dataset")
        self.config = config
        mins = float(config.minutes_per_match)

        self._sums = {
            "home": np.zeros((N_LEVELS, 8)),
            "away": np.zeros((N_LEVELS, 8)),
        }
        self._rd_sum = np.zeros(N_LEVELS)
        self._rd_sumsq = np.zeros(N_LEVELS)
        self._gd_sum = np.zeros(N_LEVELS)
        self._counts = np.zeros(N_LEVELS, dtype=np.int64)
        self._rows: dict[str, tuple[int, np.ndarray, np.ndarray, float, int]] = {}

        for i, match in enumerate(dataset):
            if not trace.eligible[i] or not _has_fit_stats(match):
                continue
            rd = float(trace.rd[i])
            li = assign_rdl(rd) - 1
            p = match.home_possession
            m_home = mins * p
            m_away = mins * (1.0 - p)
            home_row = np.array([
                m_home, m_away,
                match.home_shots, m_home - match.home_shots,
                match.home_sot, match.home_shots - match.home_sot,
                match.home_goals, match.home_sot - match.home_goals,
            ])
            away_row = np.array([
                m_away, m_home,
                match.away_shots, m_away - match.away_shots,
                match.away_sot, match.away_shots - match.away_sot,
                match.away_goals, match.away_sot - match.away_goals,
            ])
            self._sums["home"][li] += home_row
            self._sums["away"][li] += away_row
            self._rd_sum[li] += rd
            self._rd_sumsq[li] += rd * rd
            self._gd_sum[li] += match.goal_difference
            self._counts[li] += 1
            self._rows[match.match_id] = (li, home_row, away_row, rd, match.goal_difference)

    @property
    def n_fitted(self) -> int:
        return int(self._counts.sum())

    def params(self, exclude: str | None = None) -> BnParameters:
        sums = {side: self._sums[side].copy() for side in ("home", "away")}
        rd_sum = self._rd_sum.copy()
        rd_sumsq = self._rd_sumsq.copy()
        counts = self._counts.copy()
        if exclude is not None and exclude in self._rows:
            li, home_row, away_row, rd, _ = self._rows[exclude]
            sums["home"][li] -= home_row
            sums["away"][li] -= away_row
            rd_sum[li] -= rd
            rd_sumsq[li] -= rd * rd
            counts[li] -= 1

        with np.errstate(invalid="ignore", divide="ignore"):
            mu = np.where(counts > 0, rd_sum / np.maximum(counts, 1), np.nan)
            var = np.where(
                counts > 1,
                (rd_sumsq - rd_sum**2 / np.maximum(counts, 1)) / np.maximum(counts - 1, 1),
                np.nan,
            )
        var = np.where(var <= 0, np.nan, var)

        eps = self.config.smoothing
        sides = {}
        for side in ("home", "away"):
            s = sums[side] + eps
            sides[side] = SideParams(
                poss_a=s[:, 0], poss_b=s[:, 1], shot_a=s[:, 2], shot_b=s[:, 3],
                sot_a=s[:, 4], sot_b=s[:, 5], goal_a=s[:, 6], goal_b=s[:, 7],
                rd_mu=mu.copy(), rd_var=var.copy(), count=counts.copy(),
            )

        table = RdlTable(counts=counts.copy())
        low = table.low_support_levels()
        if low and exclude is None:
            log.warning("levels with fewer than 50 data points: %s", low)
        return BnParameters(
            rdl=table, home=sides["home"], away=sides["away"], fit_config=self.config
        )

    def level_summary(self) -> list[dict]:
        """Per-level bounds, support count, mean RD and mean observed GD."""
        rows = []
        for li in range(N_LEVELS):
            lower, upper = level_bounds(li + 1)
            c = int(self._counts[li])
            rows.append({
                "level": li + 1,
                "rd_lower": lower,
                "rd_upper": upper,
                "count": c,
                "mean_rd": self._rd_sum[li] / c if c else None,
                "mean_observed_gd": self._gd_sum[li] / c if c else None,
            })
        return rows


def fit(dataset, trace, exclude: str | None = None, config: FitConfig = FitConfig()) -> BnParameters:
    """Fit per-level Beta parameters; `exclude` drops one match (LOOCV)."""
    return BnFitter(dataset, trace, config).params(exclude)


@dataclass
class MatchForecast:
    """Forecast distributions for one match at a given rating difference."""

    gd_pmf: dict[int, float]
    p_1x2: tuple[float, float, float]
    rd: float
    level: int
    sample_count: int
    seed: int

    def ah_probs(self, line: ah.HandicapLine) -> tuple[float, float]:
        return (
            ah.ah_model_prob(self.gd_pmf, line, ah.Side.HOME),
            ah.ah_model_prob(self.gd_pmf, line, ah.Side.AWAY),
        )


def _pmf_from_counts(counts: np.ndarray, total: int) -> dict[int, float]:
    return {
        gd: int(counts[gd - GD_MIN]) / total
        for gd in range(GD_MIN, GD_MAX + 1)
        if counts[gd - GD_MIN]
    }


def _p1x2_from_pmf(pmf: dict[int, float]) -> tuple[float, float, float]:
    home = sum(p for gd, p in pmf.items() if gd > 0)
    draw = pmf.get(0, 0.0)
    away = sum(p for gd, p in pmf.items() if gd < 0)
    return (float(home), float(draw), float(away))


def _sample_gd_counts(params: BnParameters, level: int, n: int, rng) -> np.ndarray:
    li = level - 1
    if params.fixed is not None:
        pm = params.fixed
        possession = np.full(n, pm.possession)
        chains = {"home": pm.home, "away": pm.away}
    else:
        params.home.validate_level(level)
        params.away.validate_level(level)
        home = params.home
        possession = rng.beta(home.poss_a[li], home.poss_b[li], n)
        chains = None

    minutes_home = np.rint(params.fit_config.minutes_per_match * possession).astype(np.int64)
    minutes_away = params.fit_config.minutes_per_match - minutes_home

    goals = {}
    for side, minutes in (("home", minutes_home), ("away", minutes_away)):
        if chains is not None:
            chain = chains[side]
            p_shot = np.full(n, chain.shot_rate)
            p_sot = np.full(n, chain.on_target)
            p_goal = np.full(n, chain.conversion)
        else:
            sp = params.side(side)
            p_shot = rng.beta(sp.shot_a[li], sp.shot_b[li], n)
            p_sot = rng.beta(sp.sot_a[li], sp.sot_b[li], n)
            p_goal = rng.beta(sp.goal_a[li], sp.goal_b[li], n)
        shots = rng.binomial(minutes, p_shot)
        on_target = rng.binomial(shots, p_sot)
        goals[side] = rng.binomial(on_target, p_goal)

    gd = np.clip(goals["home"] - goals["away"], GD_MIN, GD_MAX)
    return np.bincount(gd - GD_MIN, minlength=GD_MAX - GD_MIN + 1)


def forecast(
    rd: float,
    params: BnParameters,
    n_samples: int = 100_000,
    *,
    seed: int,
    mode: str = "hard",
) -> MatchForecast:
    """Forward-sample the chain for both sides and tally the GD pmf.

    `mode="hard"` uses the single level containing `rd`; `mode="soft"`
    mixes levels under the Gaussian RD posterior. Deterministic for a
    fixed (rd, params, n_samples, seed, mode). Goal differences beyond
    +/-15 fold into the extremes.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    level = assign_rdl(rd)

    if mode == "hard" or params.fixed is not None:
        rng = np.random.default_rng(seed)
        counts = _sample_gd_counts(params, level, n_samples, rng)
        pmf = _pmf_from_counts(counts, n_samples)
    elif mode == "soft":
        posterior = soft_rdl_posterior(rd, params)
        pmf_acc = np.zeros(GD_MAX - GD_MIN + 1)
        for li in np.nonzero(posterior >= 1e-4)[0]:
            rng = np.random.default_rng(np.random.SeedSequence((seed, int(li))))
            counts = _sample_gd_counts(params, int(li) + 1, n_samples, rng)
            pmf_acc += posterior[li] * counts / n_samples
        pmf_acc /= pmf_acc.sum()
        pmf = {
            gd: float(pmf_acc[gd - GD_MIN])
            for gd in range(GD_MIN, GD_MAX + 1)
            if pmf_acc[gd - GD_MIN]
        }
    else:
        raise ValueError(f"unknown inference mode {mode!r}")

    return MatchForecast(
        gd_pmf=pmf,
        p_1x2=_p1x2_from_pmf(pmf),
        rd=float(rd),
        level=level,
        sample_count=n_samples,
        seed=seed,
    )


def enumerate_forecast(params: BnParameters, max_goals: int = 25) -> tuple[dict[int, float], float]:
    """Exact GD pmf for point-mass parameters.

    Each side's goal count is Binomial(minutes, shot*on_target*conversion)
    by composition of Binomial thinnings; the two sides convolve into the
    goal-difference pmf. Returns (pmf, mass truncated beyond max_goals).
    """
    if params.fixed is None:
        raise ValueError("enumerate_forecast requires point-mass parameters")
    pm = params.fixed
    total_minutes = params.fit_config.minutes_per_match
    minutes_home = int(np.rint(total_minutes * pm.possession))
    minutes_away = total_minutes - minutes_home

    def side_pmf(n: int, p: float) -> list[float]:
        top = min(n, max_goals)
        return [math.comb(n, g) * p**g * (1.0 - p) ** (n - g) for g in range(top + 1)]

    home = side_pmf(minutes_home, pm.home.composite)
    away = side_pmf(minutes_away, pm.away.composite)

    pmf: dict[int, float] = {}
    for gh, ph in enumerate(home):
        for ga, pa in enumerate(away):
            if ph * pa:
                pmf[gh - ga] = pmf.get(gh - ga, 0.0) + ph * pa
    truncated = 1.0 - sum(pmf.values())
    return pmf, truncated


def fold_pmf(pmf: dict[int, float], lo: int = GD_MIN, hi: int = GD_MAX) -> dict[int, float]:
    """Fold pmf mass outside [lo, hi] into the boundary values."""
    out: dict[int, float] = {}
    for gd, p in pmf.items():
        out_gd = min(max(gd, lo), hi)
        out[out_gd] = out.get(out_gd, 0.0) + p
    return out


def soft_rdl_posterior(rd: float, params: BnParameters) -> np.ndarray:
    """Posterior over levels: level prior (support share) times N(rd; mu, var).

    Falls back to a one-hot hard assignment when every density underflows.
    """
    counts = params.rdl.counts.astype(float)
    if counts.sum() == 0:
        raise ValueError("soft posterior requires fitted level counts")
    mu = params.home.rd_mu
    var = params.home.rd_var
    log_post = np.full(N_LEVELS, -np.inf)
    with np.errstate(over="ignore"):  # a hopeless level legitimately hits -inf
        for li in range(N_LEVELS):
            if counts[li] > 0 and np.isfinite(mu[li]) and np.isfinite(var[li]) and var[li] > 0:
                log_post[li] = (
                    math.log(counts[li])
                    - 0.5 * math.log(2.0 * math.pi * var[li])
                    - (rd - mu[li]) ** 2 / (2.0 * var[li])
                )
    peak = log_post.max()
    if not np.isfinite(peak):
        fallback = np.zeros(N_LEVELS)
        fallback[assign_rdl(rd) - 1] = 1.0
        return fallback
    weights = np.exp(log_post - peak)
    return weights / weights.sum()


def expected_gd(params: BnParameters, level: int) -> float:
    """Model-implied expected goal difference at a level (Beta means,
    continuous minutes)."""
    minutes = params.fit_config.minutes_per_match
    if params.fixed is not None:
        pm = params.fixed
        return minutes * (
            pm.possession * pm.home.composite - (1.0 - pm.possession) * pm.away.composite
        )
    li = level - 1
    home = params.home
    poss = home.poss_a[li] / (home.poss_a[li] + home.poss_b[li])
    expected = {}
    for side, share in (("home", poss), ("away", 1.0 - poss)):
        sp = params.side(side)
        rate = (
            sp.shot_a[li] / (sp.shot_a[li] + sp.shot_b[li])
            * sp.sot_a[li] / (sp.sot_a[li] + sp.sot_b[li])
            * sp.goal_a[li] / (sp.goal_a[li] + sp.goal_b[li])
        )
        expected[side] = minutes * share * rate
    return float(expected["home"] - expected["away"])


def match_seed(global_seed: int, match_id: str) -> int:
    """Stable per-match seed so parallel forecasts are schedule-independent."""
    digest = hashlib.sha256(f"{global_seed}:{match_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")
