"""Versioned structured-text persistence for every pipeline artifact.

File layout:

    handicap-lab/v1/<kind>
    sha256:<hex digest of the body>
    <canonical JSON body>

Floats serialise through repr, which round-trips bit-for-bit, so
load(save(x)) reproduces x exactly. The digest guards against
truncation and corruption.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import bn
from .backtest import BacktestReport, BetRow, ForecastRecord
from .errors import ArtifactIntegrityError, ArtifactVersionError
from .ingest import Dataset, MatchRecord
from .ratings import RatingBook, RatingParams, TeamRating

FORMAT_PREFIX = "handicap-lab/v1"

KIND_DATASET = "dataset"
KIND_RATINGS = "ratings"
KIND_BN_PARAMS = "bn-params"
KIND_FORECASTS = "forecasts"
KIND_BACKTEST = "backtest-report"


def _kind_of(value) -> str:
    if isinstance(value, Dataset):
        return KIND_DATASET
    if isinstance(value, RatingBook):
        return KIND_RATINGS
    if isinstance(value, bn.BnParameters):
        return KIND_BN_PARAMS
    if isinstance(value, BacktestReport):
        return KIND_BACKTEST
    if isinstance(value, (list, tuple)) and all(isinstance(v, ForecastRecord) for v in value):
        return KIND_FORECASTS
    raise ArtifactVersionError(f"no artifact kind for {type(value).__name__}")


def save_artifact(path, value, kind: str | None = None) -> str:
    """Write `value` as a versioned artifact; returns the body digest."""
    kind = kind or _kind_of(value)
    if kind not in _ENCODERS:
        raise ArtifactVersionError(f"unknown artifact kind {kind!r}")
    body = _canonical_json(_ENCODERS[kind](value))
    digest = hashlib.sha256(body.encode()).hexdigest()
    text = f"{FORMAT_PREFIX}/{kind}\nsha256:{digest}\n{body}"
    Path(path).write_text(text, encoding="utf-8")
    return digest


def load_artifact(path, expected_kind: str | None = None):
    """Read an artifact back; verifies version header and body digest."""
    text = Path(path).read_text(encoding="utf-8")
    parts = text.split("\n", 2)
    if len(parts) < 3:
        raise ArtifactIntegrityError(f"{path}: truncated artifact file")
    header, digest_line, body = parts

    prefix, _, kind = header.rpartition("/")
    if prefix != FORMAT_PREFIX or kind not in _DECODERS:
        raise ArtifactVersionError(f"{path}: unsupported artifact header {header!r}")
    if expected_kind is not None and kind != expected_kind:
        raise ArtifactVersionError(f"{path}: expected {expected_kind!r}, found {kind!r}")
    if not digest_line.startswith("sha256:"):
        raise ArtifactIntegrityError(f"{path}: missing digest line")
    if hashlib.sha256(body.encode()).hexdigest() != digest_line[len("sha256:"):]:
        raise ArtifactIntegrityError(f"{path}: body does not match recorded digest")
    return _DECODERS[kind](json.loads(body))


def artifact_digest(value, kind: str | None = None) -> str:
    """Digest of the canonical body without writing a file."""
    kind = kind or _kind_of(value)
    body = _canonical_json(_ENCODERS[kind](value))
    return hashlib.sha256(body.encode()).hexdigest()


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


# ---------------------------------------------------------------------------
# per-kind encoders/decoders
# ---------------------------------------------------------------------------

def _enc_match(m: MatchRecord) -> dict:
    return {
        "match_id": m.match_id,
        "date": m.date.isoformat(),
        "season": m.season,
        "home_team": m.home_team,
        "away_team": m.away_team,
        "home_goals": m.home_goals,
        "away_goals": m.away_goals,
        "home_possession": m.home_possession,
        "home_shots": m.home_shots,
        "away_shots": m.away_shots,
        "home_sot": m.home_sot,
        "away_sot": m.away_sot,
        "odds_1x2_avg": list(m.odds_1x2_avg) if m.odds_1x2_avg else None,
        "odds_1x2_max": list(m.odds_1x2_max) if m.odds_1x2_max else None,
        "ah_line": m.ah_line,
        "odds_ah_avg": list(m.odds_ah_avg) if m.odds_ah_avg else None,
        "odds_ah_max": list(m.odds_ah_max) if m.odds_ah_max else None,
    }


def _dec_match(d: dict) -> MatchRecord:
    return MatchRecord(
        match_id=d["match_id"],
        date=dt.date.fromisoformat(d["date"]),
        season=d["season"],
        home_team=d["home_team"],
        away_team=d["away_team"],
        home_goals=d["home_goals"],
        away_goals=d["away_goals"],
        home_possession=d["home_possession"],
        home_shots=d["home_shots"],
        away_shots=d["away_shots"],
        home_sot=d["home_sot"],
        away_sot=d["away_sot"],
        odds_1x2_avg=tuple(d["odds_1x2_avg"]) if d["odds_1x2_avg"] else None,
        odds_1x2_max=tuple(d["odds_1x2_max"]) if d["odds_1x2_max"] else None,
        ah_line=d["ah_line"],
        odds_ah_avg=tuple(d["odds_ah_avg"]) if d["odds_ah_avg"] else None,
        odds_ah_max=tuple(d["odds_ah_max"]) if d["odds_ah_max"] else None,
    )


def _enc_dataset(ds: Dataset) -> dict:
    return {"provenance": ds.provenance, "matches": [_enc_match(m) for m in ds.matches]}


def _dec_dataset(d: dict) -> Dataset:
    return Dataset(
        matches=tuple(_dec_match(m) for m in d["matches"]), provenance=d["provenance"]
    )


def _enc_ratings(book: RatingBook) -> dict:
    p = book.params
    return {
        "params": {
            "lambda": p.lambda_,
            "gamma": p.gamma,
            "k": p.k,
            "new_team_threshold": p.new_team_threshold,
            "k_rule": p.k_rule,
        },
        "teams": {
            name: {"home": r.home, "away": r.away, "played": r.played}
            for name, r in sorted(book.teams().items())
        },
    }


def _dec_ratings(d: dict) -> RatingBook:
    p = d["params"]
    book = RatingBook(
        RatingParams(
            lambda_=p["lambda"],
            gamma=p["gamma"],
            k=p["k"],
            new_team_threshold=p["new_team_threshold"],
            k_rule=p["k_rule"],
        )
    )
    for name, r in d["teams"].items():
        book._teams[name] = TeamRating(home=r["home"], away=r["away"], played=r["played"])
    return book


def _enc_floats(arr) -> list:
    return [None if not math.isfinite(v) else float(v) for v in np.asarray(arr, dtype=float)]


def _dec_floats(values) -> np.ndarray:
    return np.array([math.nan if v is None else v for v in values], dtype=float)


def _enc_side(side: bn.SideParams) -> dict:
    out = {name: _enc_floats(getattr(side, name)) for name in
           ("poss_a", "poss_b", "shot_a", "shot_b", "sot_a", "sot_b", "goal_a", "goal_b",
            "rd_mu", "rd_var")}
    out["count"] = [int(c) for c in side.count]
    return out


def _dec_side(d: dict) -> bn.SideParams:
    kwargs = {name: _dec_floats(d[name]) for name in
              ("poss_a", "poss_b", "shot_a", "shot_b", "sot_a", "sot_b", "goal_a", "goal_b",
               "rd_mu", "rd_var")}
    kwargs["count"] = np.array(d["count"], dtype=np.int64)
    return bn.SideParams(**kwargs)


def _enc_bn(params: bn.BnParameters) -> dict:
    fixed = None
    if params.fixed is not None:
        pm = params.fixed
        fixed = {
            "possession": pm.possession,
            "home": [pm.home.shot_rate, pm.home.on_target, pm.home.conversion],
            "away": [pm.away.shot_rate, pm.away.on_target, pm.away.conversion],
        }
    return {
        "fit_config": {
            "smoothing": params.fit_config.smoothing,
            "minutes_per_match": params.fit_config.minutes_per_match,
        },
        "counts": [int(c) for c in params.rdl.counts],
        "home": _enc_side(params.home),
        "away": _enc_side(params.away),
        "fixed": fixed,
    }


def _dec_bn(d: dict) -> bn.BnParameters:
    fixed = None
    if d["fixed"] is not None:
        f = d["fixed"]
        fixed = bn.PointMass(
            possession=f["possession"],
            home=bn.ChainProbs(*f["home"]),
            away=bn.ChainProbs(*f["away"]),
        )
    return bn.BnParameters(
        rdl=bn.RdlTable(counts=np.array(d["counts"], dtype=np.int64)),
        home=_dec_side(d["home"]),
        away=_dec_side(d["away"]),
        fit_config=bn.FitConfig(
            smoothing=d["fit_config"]["smoothing"],
            minutes_per_match=d["fit_config"]["minutes_per_match"],
        ),
        fixed=fixed,
    )


def _enc_forecasts(records) -> dict:
    rows = []
    for r in records:
        rows.append({
            "match_id": r.match_id,
            "p_1x2": list(r.p_1x2) if r.p_1x2 else None,
            "ah_home": r.ah_home,
            "ah_away": r.ah_away,
            "gd_pmf": {str(k): v for k, v in sorted(r.gd_pmf.items())} if r.gd_pmf else None,
            "rd": r.rd,
            "level": r.level,
            "sample_count": r.sample_count,
            "seed": r.seed,
        })
    return {"records": rows}


def _dec_forecasts(d: dict) -> list[ForecastRecord]:
    out = []
    for r in d["records"]:
        out.append(ForecastRecord(
            match_id=r["match_id"],
            p_1x2=tuple(r["p_1x2"]) if r["p_1x2"] else None,
            ah_home=r["ah_home"],
            ah_away=r["ah_away"],
            gd_pmf={int(k): v for k, v in r["gd_pmf"].items()} if r["gd_pmf"] else None,
            rd=r["rd"],
            level=r["level"],
            sample_count=r["sample_count"],
            seed=r["seed"],
        ))
    return out


def _enc_backtest(report: BacktestReport) -> dict:
    return {
        "market": report.market,
        "odds_source": report.odds_source,
        "theta": report.theta,
        "stake": report.stake,
        "rows": [
            {
                "match_id": r.match_id,
                "match_index": r.match_index,
                "date": r.date.isoformat(),
                "season": r.season,
                "market": r.market,
                "selection": r.selection,
                "model_p": r.model_p,
                "odds": r.odds,
                "discrepancy": r.discrepancy,
                "stake": r.stake,
                "returned": r.returned,
            }
            for r in report.rows
        ],
    }


def _dec_backtest(d: dict) -> BacktestReport:
    rows = [
        BetRow(
            match_id=r["match_id"],
            match_index=r["match_index"],
            date=dt.date.fromisoformat(r["date"]),
            season=r["season"],
            market=r["market"],
            selection=r["selection"],
            model_p=r["model_p"],
            odds=r["odds"],
            discrepancy=r["discrepancy"],
            stake=r["stake"],
            returned=r["returned"],
        )
        for r in d["rows"]
    ]
    return BacktestReport(
        market=d["market"], odds_source=d["odds_source"], theta=d["theta"],
        stake=d["stake"], rows=rows,
    )


_ENCODERS = {
    KIND_DATASET: _enc_dataset,
    KIND_RATINGS: _enc_ratings,
    KIND_BN_PARAMS: _enc_bn,
    KIND_FORECASTS: _enc_forecasts,
    KIND_BACKTEST: _enc_backtest,
}

_DECODERS = {
    KIND_DATASET: _dec_dataset,
    KIND_RATINGS: _dec_ratings,
    KIND_BN_PARAMS: _dec_bn,
    KIND_FORECASTS: _dec_forecasts,
    KIND_BACKTEST: _dec_backtest,
}
