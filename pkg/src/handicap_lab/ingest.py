"""Parse raw match CSVs and the possession sidecar into a validated dataset.

The CSV layout follows football-data.co.uk conventions; a column alias
table maps both the old "Bb"-prefixed odds columns and the newer
"Avg"/"Max" names onto canonical fields. Unknown columns are ignored.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import DataError

# Canonical field -> source column aliases, first present wins.
# Covers the historic Betbrain-prefixed era and the current names.
DEFAULT_COLUMN_MAP: dict[str, tuple[str, ...]] = {
    "match_id": ("MatchId", "Id"),
    "date": ("Date",),
    "season": ("Season",),
    "home_team": ("HomeTeam", "Home", "HT"),
    "away_team": ("AwayTeam", "Away", "AT"),
    "home_goals": ("FTHG", "HG"),
    "away_goals": ("FTAG", "AG"),
    "home_possession": ("HPOS",),
    "home_shots": ("HS",),
    "away_shots": ("AS",),
    "home_sot": ("HST",),
    "away_sot": ("AST",),
    "odds_home_avg": ("AvgH", "BbAvH"),
    "odds_draw_avg": ("AvgD", "BbAvD"),
    "odds_away_avg": ("AvgA", "BbAvA"),
    "odds_home_max": ("MaxH", "BbMxH"),
    "odds_draw_max": ("MaxD", "BbMxD"),
    "odds_away_max": ("MaxA", "BbMxA"),
    "ah_line": ("AHh", "BbAHh"),
    "odds_ah_home_avg": ("AvgAHH", "BbAvAHH"),
    "odds_ah_away_avg": ("AvgAHA", "BbAvAHA"),
    "odds_ah_home_max": ("MaxAHH", "BbMxAHH"),
    "odds_ah_away_max": ("MaxAHA", "BbMxAHA"),
}

MANDATORY_FIELDS = ("date", "home_team", "away_team", "home_goals", "away_goals")

_DATE_FORMATS = ("%d/%m/%Y", "%d/%m/%y", "%Y-%m-%d")


@dataclass(frozen=True)
class MatchRecord:
    """One fixture with result, match stats and market odds.

    Odds are decimal; the AH line is stored in quarter-goal units applied
    to the home team (handicap * 4). Stats/odds fields are None when the
    source column is absent or empty.
    """

    match_id: str
    date: dt.date
    season: str
    home_team: str
    away_team: str
    home_goals: int
    away_goals: int
    home_possession: float | None = None
    home_shots: int | None = None
    away_shots: int | None = None
    home_sot: int | None = None
    away_sot: int | None = None
    odds_1x2_avg: tuple[float, float, float] | None = None
    odds_1x2_max: tuple[float, float, float] | None = None
    ah_line: int | None = None
    odds_ah_avg: tuple[float, float] | None = None
    odds_ah_max: tuple[float, float] | None = None

    def __post_init__(self):
        if self.home_team == self.away_team:
            raise DataError(f"team plays itself: {self.home_team!r}")
        if self.home_goals < 0 or self.away_goals < 0:
            raise DataError("goals must be non-negative")
        for name in ("home_shots", "away_shots", "home_sot", "away_sot"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise DataError(f"{name} must be non-negative")
        if self.home_possession is not None and not 0.0 <= self.home_possession <= 1.0:
            raise DataError(f"home_possession {self.home_possession} outside [0, 1]")
        for sot, shots, side in (
            (self.home_sot, self.home_shots, "home"),
            (self.away_sot, self.away_shots, "away"),
        ):
            if sot is not None and shots is not None and sot > shots:
                raise DataError(f"{side} shots on target ({sot}) exceed shots ({shots})")
        if self.home_sot is not None and self.home_goals > self.home_sot:
            raise DataError(
                f"home goals ({self.home_goals}) exceed shots on target ({self.home_sot})"
            )
        if self.away_sot is not None and self.away_goals > self.away_sot:
            raise DataError(
                f"away goals ({self.away_goals}) exceed shots on target ({self.away_sot})"
            )
        for name in ("odds_1x2_avg", "odds_1x2_max", "odds_ah_avg", "odds_ah_max"):
            odds = getattr(self, name)
            if odds is not None and any(o <= 1.0 for o in odds):
                raise DataError(f"{name} contains decimal odds <= 1: {odds}")
        if self.ah_line is not None and not isinstance(self.ah_line, int):
            raise DataError("ah_line must be an integer number of quarter-goals")

    @property
    def goal_difference(self) -> int:
        return self.home_goals - self.away_goals

    def sort_key(self):
        return (self.date, self.match_id)


@dataclass(frozen=True)
class Dataset:
    """Chronologically ordered matches plus source-file digests."""

    matches: tuple[MatchRecord, ...]
    provenance: dict[str, str]

    def __post_init__(self):
        seen: set[str] = set()
        previous: MatchRecord | None = None
        for m in self.matches:
            if m.match_id in seen:
                raise DataError(f"duplicate match_id {m.match_id!r}")
            seen.add(m.match_id)
            if previous is not None and m.sort_key() < previous.sort_key():
                # match_id breaks ties within a date so replay order (and
                # everything downstream) is independent of source row order
                raise DataError(f"matches out of canonical order at {m.match_id!r}")
            previous = m

    def __len__(self):
        return len(self.matches)

    def __iter__(self):
        return iter(self.matches)

    @classmethod
    def from_matches(cls, matches, provenance=None) -> "Dataset":
        ordered = tuple(sorted(matches, key=MatchRecord.sort_key))
        return cls(matches=ordered, provenance=dict(provenance or {}))

    @property
    def seasons(self) -> list[str]:
        out: list[str] = []
        for m in self.matches:
            if m.season not in out:
                out.append(m.season)
        return out


def season_of(date: dt.date) -> str:
    """Season label for a date, using an August-to-July window."""
    start = date.year if date.month >= 8 else date.year - 1
    return f"{start}/{(start + 1) % 100:02d}"


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _parse_date(cell: str, row: int, path) -> dt.date:
    for fmt in _DATE_FORMATS:
        try:
            return dt.datetime.strptime(cell, fmt).date()
        except ValueError:
            continue
    raise DataError(f"unparseable date {cell!r}", row=row, path=path)


def _parse_int(cell: str, field: str, row: int, path) -> int:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"malformed numeric cell {cell!r} for {field}", row=row, path=path)
    if value != int(value):
        raise DataError(f"{field} must be an integer, got {cell!r}", row=row, path=path)
    return int(value)


def _parse_float(cell: str, field: str, row: int, path) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"malformed numeric cell {cell!r} for {field}", row=row, path=path)


def _quarter_units(line_goals: float, row: int, path) -> int:
    units = round(line_goals * 4)
    if abs(line_goals * 4 - units) > 1e-6:
        raise DataError(
            f"AH line {line_goals} is not a quarter-goal multiple", row=row, path=path
        )
    return units


def _odds_triple(row_get, prefix, row, path):
    cells = [row_get(f"odds_{o}_{prefix}") for o in ("home", "draw", "away")]
    if all(c is None for c in cells):
        return None
    if any(c is None for c in cells):
        raise DataError(f"incomplete 1X2 {prefix} odds", row=row, path=path)
    return tuple(_parse_float(c, f"1X2 {prefix} odds", row, path) for c in cells)


def _odds_pair(row_get, prefix, row, path):
    cells = [row_get(f"odds_ah_{s}_{prefix}") for s in ("home", "away")]
    if all(c is None for c in cells):
        return None
    if any(c is None for c in cells):
        raise DataError(f"incomplete AH {prefix} odds", row=row, path=path)
    return tuple(_parse_float(c, f"AH {prefix} odds", row, path) for c in cells)


def parse_match_csv(path, column_map=None) -> list[MatchRecord]:
    """Parse one football-data style CSV into validated MatchRecords.

    Missing optional columns (or empty cells) yield absent fields; a
    missing mandatory column, malformed cell or invariant violation
    raises DataError with the offending row number.
    """
    aliases = dict(DEFAULT_COLUMN_MAP)
    if column_map:
        aliases.update({k: tuple(v) for k, v in column_map.items()})

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")

    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None:
        raise DataError("empty file", path=path)
    header = {name.strip(): name for name in reader.fieldnames if name}

    resolved: dict[str, str] = {}
    for field, names in aliases.items():
        for name in names:
            if name in header:
                resolved[field] = header[name]
                break
    missing = [f for f in MANDATORY_FIELDS if f not in resolved]
    if missing:
        raise DataError(f"header missing mandatory column(s): {', '.join(missing)}", path=path)

    records: list[MatchRecord] = []
    for raw in reader:
        row_num = reader.line_num

        def cell(field):
            column = resolved.get(field)
            if column is None:
                return None
            value = raw.get(column)
            if value is None:
                return None
            value = value.strip()
            return value or None

        date_cell = cell("date")
        if date_cell is None:
            if all(cell(f) is None for f in MANDATORY_FIELDS):
                continue  # blank trailing line
            raise DataError("missing date", row=row_num, path=path)
        date = _parse_date(date_cell, row_num, path)
        home = cell("home_team")
        away = cell("away_team")
        if not home or not away:
            raise DataError("missing team name", row=row_num, path=path)

        possession = cell("home_possession")
        ah_cell = cell("ah_line")
        try:
            record = MatchRecord(
                match_id=cell("match_id")
                or f"{date.isoformat()}_{home.replace(' ', '-')}_{away.replace(' ', '-')}",
                date=date,
                season=cell("season") or season_of(date),
                home_team=home,
                away_team=away,
                home_goals=_parse_int(cell("home_goals"), "home_goals", row_num, path),
                away_goals=_parse_int(cell("away_goals"), "away_goals", row_num, path),
                home_possession=(
                    _parse_float(possession, "home_possession", row_num, path)
                    if possession is not None
                    else None
                ),
                home_shots=_opt_int(cell("home_shots"), "home_shots", row_num, path),
                away_shots=_opt_int(cell("away_shots"), "away_shots", row_num, path),
                home_sot=_opt_int(cell("home_sot"), "home_sot", row_num, path),
                away_sot=_opt_int(cell("away_sot"), "away_sot", row_num, path),
                odds_1x2_avg=_odds_triple(cell, "avg", row_num, path),
                odds_1x2_max=_odds_triple(cell, "max", row_num, path),
                ah_line=(
                    _quarter_units(_parse_float(ah_cell, "ah_line", row_num, path), row_num, path)
                    if ah_cell is not None
                    else None
                ),
                odds_ah_avg=_odds_pair(cell, "avg", row_num, path),
                odds_ah_max=_odds_pair(cell, "max", row_num, path),
            )
        except DataError as exc:
            if exc.row is None:
                raise DataError(str(exc), row=row_num, path=path) from exc
            raise
        records.append(record)
    return records


def _opt_int(cell, field, row, path):
    return _parse_int(cell, field, row, path) if cell is not None else None


def merge_possession(matches, sidecar_path) -> tuple[list[MatchRecord], list[dict]]:
    """Join the possession sidecar onto the matches by (date, home, away).

    Returns the updated records plus the sidecar rows that matched no
    fixture. Possession arrives as a percentage and is stored as a
    fraction; values outside [0, 100] or keys matching several fixtures
    raise DataError. The merge is idempotent.
    """
    sidecar_path = Path(sidecar_path)
    try:
        text = sidecar_path.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read {sidecar_path}: {exc}")

    index: dict[tuple[dt.date, str, str], list[int]] = {}
    for i, m in enumerate(matches):
        index.setdefault((m.date, m.home_team, m.away_team), []).append(i)

    updated = list(matches)
    unmatched: list[dict] = []
    reader = csv.DictReader(text.splitlines())
    required = {"date", "home_team", "away_team", "home_possession_pct"}
    if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
        raise DataError(
            "sidecar must have columns date,home_team,away_team,home_possession_pct",
            path=sidecar_path,
        )
    for raw in reader:
        row_num = reader.line_num
        date = _parse_date(raw["date"].strip(), row_num, sidecar_path)
        key = (date, raw["home_team"].strip(), raw["away_team"].strip())
        pct = _parse_float(
            raw["home_possession_pct"].strip(), "home_possession_pct", row_num, sidecar_path
        )
        if not 0.0 <= pct <= 100.0:
            raise DataError(
                f"possession {pct} outside [0, 100]", row=row_num, path=sidecar_path
            )
        hits = index.get(key, [])
        if len(hits) > 1:
            raise DataError(
                f"ambiguous fixture key {key}: matches {len(hits)} records",
                row=row_num,
                path=sidecar_path,
            )
        if not hits:
            unmatched.append(dict(raw))
            continue
        i = hits[0]
        updated[i] = replace(updated[i], home_possession=pct / 100.0)
    return updated, unmatched
