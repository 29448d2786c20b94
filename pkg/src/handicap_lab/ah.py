"""Asian Handicap settlement and probability helpers.

Handicap lines are stored as integer quarter-goal units applied to the
home team (e.g. a -0.75 line is -3 units), so whole/half/quarter
classification and settlement are exact integer arithmetic throughout.
A quarter line is settled as two half-stake bets on the adjacent
whole/half lines, each at the quoted odds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class LegOutcome(enum.Enum):
    WIN = "win"
    LOSE = "lose"
    VOID = "void"


class Side(enum.Enum):
    HOME = "home"
    AWAY = "away"


@dataclass(frozen=True)
class HandicapLine:
    """A handicap applied to the home team, in quarter-goal units."""

    quarter_units: int

    def __post_init__(self):
        if not isinstance(self.quarter_units, int):
            raise TypeError("quarter_units must be an integer")

    @classmethod
    def from_goals(cls, goals: float) -> "HandicapLine":
        units = round(goals * 4)
        if abs(goals * 4 - units) > 1e-9:
            raise ValueError(f"handicap {goals} is not a quarter-goal multiple")
        return cls(units)

    @property
    def goals(self) -> float:
        return self.quarter_units / 4

    @property
    def is_whole(self) -> bool:
        return self.quarter_units % 4 == 0

    @property
    def is_half(self) -> bool:
        return self.quarter_units % 2 == 0 and self.quarter_units % 4 != 0

    @property
    def is_quarter(self) -> bool:
        return self.quarter_units % 2 != 0

    def __str__(self):
        sign = "+" if self.quarter_units > 0 else ""
        return f"AH{sign}{self.goals:g}"


@dataclass(frozen=True)
class AhQuote:
    """Decimal odds for the home and away sides of one handicap line."""

    odds_home: float
    odds_away: float

    def __post_init__(self):
        if self.odds_home <= 1.0 or self.odds_away <= 1.0:
            raise ValueError("decimal AH odds must be > 1")


def settle_leg(gd: int, line: HandicapLine, side: Side) -> LegOutcome:
    """Settle a single whole- or half-line leg for a final goal difference.

    The settlement score is gd + handicap; its sign decides the winner and
    a zero settlement voids the bet (only reachable on whole lines).
    Quarter lines must be split first, see :func:`split_quarter`.
    """
    if line.is_quarter:
        raise ValueError("quarter line must be split before settlement")
    score = 4 * gd + line.quarter_units
    if score == 0:
        return LegOutcome.VOID
    home_won = score > 0
    if (side is Side.HOME) == home_won:
        return LegOutcome.WIN
    return LegOutcome.LOSE


def split_quarter(line: HandicapLine) -> tuple[HandicapLine, HandicapLine]:
    """Split a quarter line into its two adjacent whole/half lines."""
    if not line.is_quarter:
        raise ValueError(f"{line} is not a quarter line")
    return HandicapLine(line.quarter_units - 1), HandicapLine(line.quarter_units + 1)


def settle_bet(gd: int, line: HandicapLine, side: Side, stake: float, odds: float) -> float:
    """Total return of an AH bet: stake*odds on a win, stake back on a void.

    Quarter lines place half the stake on each split leg, both at the
    quoted odds, and the two legs settle independently.
    """
    if stake <= 0:
        raise ValueError("stake must be positive")
    if odds <= 1.0:
        raise ValueError("decimal odds must be > 1")
    if line.is_quarter:
        low, high = split_quarter(line)
        return settle_bet(gd, low, side, stake / 2, odds) + settle_bet(
            gd, high, side, stake / 2, odds
        )
    outcome = settle_leg(gd, line, side)
    if outcome is LegOutcome.WIN:
        return stake * odds
    if outcome is LegOutcome.VOID:
        return stake
    return 0.0


def ah_outcome(gd: int, line: HandicapLine) -> Side | None:
    """Realized binary AH outcome used for forecast scoring.

    Quarter lines are decided by their half-goal component (which can
    never void); a whole-line settlement of exactly zero returns None
    and is excluded from scoring.
    """
    if line.is_quarter:
        low, high = split_quarter(line)
        line = low if low.is_half else high
    result = settle_leg(gd, line, Side.HOME)
    if result is LegOutcome.VOID:
        return None
    return Side.HOME if result is LegOutcome.WIN else Side.AWAY


def _win_void_mass(gd_pmf, line: HandicapLine, side: Side) -> tuple[float, float]:
    win = 0.0
    void = 0.0
    for gd, p in gd_pmf.items():
        score = 4 * gd + line.quarter_units
        if score == 0:
            void += p
        elif (score > 0) == (side is Side.HOME):
            win += p
    return win, void


def ah_model_prob(gd_pmf, line: HandicapLine, side: Side) -> float:
    """Model probability that `side` wins the AH bet, given a GD pmf.

    Whole lines renormalise over the non-void mass; quarter lines average
    the two split legs (each valued under its own rule).
    """
    if line.is_quarter:
        low, high = split_quarter(line)
        return 0.5 * (ah_model_prob(gd_pmf, low, side) + ah_model_prob(gd_pmf, high, side))
    win, void = _win_void_mass(gd_pmf, line, side)
    if line.is_half:
        return win
    if void >= 1.0:
        raise ValueError("whole line voids with certainty; AH probability undefined")
    return win / (1.0 - void)


def implied_prob(odds: float) -> float:
    """Unnormalised bookmaker probability 1/odds (overround retained)."""
    if odds <= 1.0:
        raise ValueError("decimal odds must be > 1")
    return 1.0 / odds
