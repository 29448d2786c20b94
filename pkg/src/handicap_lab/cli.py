"""Command-line pipeline: ingest -> fit-ratings -> fit-bn -> forecast ->
backtest / report.

Each stage reads and writes versioned artifact files, so runs are
inspectable and resumable. All randomness flows from the single --seed;
the effective configuration is echoed into the output directory as
config.<command>.json.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import ah, artifacts, backtest, bn, metrics, ratings
from .errors import ConfigError
from .ingest import Dataset, file_digest, merge_possession, parse_match_csv


@dataclass
class RunConfig:
    seed: int | None = None
    out: str = "out"
    jobs: int = 1
    command_options: dict = field(default_factory=dict)

    @classmethod
    def load(cls, args) -> "RunConfig":
        data: dict = {}
        if args.config:
            path = Path(args.config)
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            data = json.loads(path.read_text())
        cfg = cls(
            seed=data.get("seed"),
            out=data.get("out", "out"),
            jobs=int(data.get("jobs", 1)),
            command_options={k: v for k, v in data.items() if isinstance(v, dict)},
        )
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
        if args.jobs is not None:
            cfg.jobs = args.jobs
        if cfg.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        return cfg

    def option(self, command: str, name: str, flag_value, default):
        """Flag beats config file beats default."""
        if flag_value is not None:
            return flag_value
        return self.command_options.get(command, {}).get(name, default)

    def out_dir(self) -> Path:
        path = Path(self.out)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def echo(self, command: str, effective: dict) -> None:
        payload = {"command": command, "seed": self.seed, "out": self.out,
                   "jobs": self.jobs, **effective}
        (self.out_dir() / f"config.{command}.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"
        )


def _require(path: str | None, what: str) -> Path:
    if path is None:
        raise ConfigError(f"missing required input: {what}")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} not found: {p}")
    return p


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(cfg: RunConfig, args) -> None:
    csvs = args.csv or cfg.command_options.get("ingest", {}).get("csv", [])
    if not csvs:
        raise ConfigError("ingest needs at least one --csv file")
    sidecar = cfg.option("ingest", "sidecar", args.sidecar, None)

    records = []
    provenance = {}
    for path in csvs:
        p = _require(path, "match CSV")
        records.extend(parse_match_csv(p))
        provenance[p.name] = file_digest(p)

    unmatched = []
    if sidecar:
        p = _require(sidecar, "possession sidecar")
        records, unmatched = merge_possession(records, p)
        provenance[p.name] = file_digest(p)

    dataset = Dataset.from_matches(records, provenance)
    out = cfg.out_dir()
    digest = artifacts.save_artifact(out / "dataset.hla", dataset)
    if unmatched:
        _write_csv(
            out / "unmatched_possession.csv",
            sorted(unmatched[0].keys()),
            [[row[k] for k in sorted(row.keys())] for row in unmatched],
        )
    cfg.echo("ingest", {"csv": [str(c) for c in csvs], "sidecar": sidecar,
                        "matches": len(dataset), "unmatched_sidecar_rows": len(unmatched),
                        "dataset_digest": digest})
    print(f"ingested {len(dataset)} matches -> {out / 'dataset.hla'}")


def _parse_grid(spec, default):
    """Grid spec: explicit list, or 'start:stop:step' string."""
    if spec is None:
        return default
    if isinstance(spec, str):
        start, stop, step = (float(v) for v in spec.split(":"))
        n = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 10) for i in range(n)]
    return list(spec)


def cmd_fit_ratings(cfg: RunConfig, args) -> None:
    dataset = artifacts.load_artifact(
        _require(args.dataset, "dataset artifact"), artifacts.KIND_DATASET
    )
    threshold = int(cfg.option("fit_ratings", "new_team_threshold", args.new_team_threshold, 38))
    k_rule = cfg.option("fit_ratings", "k_rule", args.k_rule, ratings.K_RULE_BOTH_BELOW)

    if args.lambda_ is not None or args.gamma is not None or args.k is not None:
        if None in (args.lambda_, args.gamma, args.k):
            raise ConfigError("--lambda, --gamma and --k must be given together")
        params = ratings.RatingParams(args.lambda_, args.gamma, args.k, threshold, k_rule)
        surface = None
    else:
        grids = {
            name: _parse_grid(
                cfg.option("fit_ratings", f"{name}_grid", getattr(args, f"{name}_grid"), None),
                default,
            )
            for name, default in (
                ("lambda", ratings.DEFAULT_LAMBDA_GRID),
                ("gamma", ratings.DEFAULT_GAMMA_GRID),
                ("k", ratings.DEFAULT_K_GRID),
            )
        }
        params, surface = ratings.grid_search(
            dataset,
            lambda_grid=grids["lambda"],
            gamma_grid=grids["gamma"],
            k_grid=[int(k) for k in grids["k"]],
            new_team_threshold=threshold,
            k_rule=k_rule,
            jobs=cfg.jobs,
        )

    book, trace = ratings.replay(dataset, params)
    out = cfg.out_dir()
    artifacts.save_artifact(out / "ratings.hla", book)
    if surface is not None:
        ratings.surface_to_csv(surface, out / "error_surface.csv")
    error = ratings.mean_abs_error(trace)
    cfg.echo("fit-ratings", {
        "lambda": params.lambda_, "gamma": params.gamma, "k": params.k,
        "new_team_threshold": threshold, "k_rule": k_rule,
        "eligible_matches": trace.n_eligible, "mean_abs_error": error,
        "backend": ratings.BACKEND,
    })
    print(
        f"ratings fitted: lambda={params.lambda_} gamma={params.gamma} k={params.k} "
        f"mean|e|={error:.4f} over {trace.n_eligible} eligible matches"
    )


def cmd_fit_bn(cfg: RunConfig, args) -> None:
    dataset = artifacts.load_artifact(
        _require(args.dataset, "dataset artifact"), artifacts.KIND_DATASET
    )
    book = artifacts.load_artifact(
        _require(args.ratings, "ratings artifact"), artifacts.KIND_RATINGS
    )
    smoothing = float(cfg.option("fit_bn", "smoothing", args.smoothing, 0.5))
    config = bn.FitConfig(smoothing=smoothing)

    _, trace = ratings.replay(dataset, book.params)
    fitter = bn.BnFitter(dataset, trace, config)
    params = fitter.params()
    out = cfg.out_dir()
    artifacts.save_artifact(out / "bn-params.hla", params)
    _write_csv(
        out / "level_summary.csv",
        ["level", "rd_lower", "rd_upper", "count", "mean_rd", "mean_observed_gd"],
        [
            [r["level"], r["rd_lower"], r["rd_upper"], r["count"],
             "" if r["mean_rd"] is None else repr(r["mean_rd"]),
             "" if r["mean_observed_gd"] is None else repr(r["mean_observed_gd"])]
            for r in fitter.level_summary()
        ],
    )
    cfg.echo("fit-bn", {"smoothing": smoothing, "fitted_matches": fitter.n_fitted})
    print(f"BN fitted on {fitter.n_fitted} matches -> {out / 'bn-params.hla'}")


def _forecast_one(fitter, match, rd, seed, n_samples, mode, loocv):
    params = fitter.params(exclude=match.match_id if loocv else None)
    mf = bn.forecast(rd, params, n_samples, seed=seed, mode=mode)
    ah_home = ah_away = None
    if match.ah_line is not None:
        ah_home, ah_away = mf.ah_probs(ah.HandicapLine(match.ah_line))
    return backtest.ForecastRecord(
        match_id=match.match_id,
        p_1x2=mf.p_1x2,
        ah_home=ah_home,
        ah_away=ah_away,
        gd_pmf=mf.gd_pmf,
        rd=mf.rd,
        level=mf.level,
        sample_count=mf.sample_count,
        seed=seed,
    )


def _forecast_chunk(fitter, tasks, n_samples, mode, loocv):
    return [
        _forecast_one(fitter, match, rd, seed, n_samples, mode, loocv)
        for match, rd, seed in tasks
    ]


def cmd_forecast(cfg: RunConfig, args) -> None:
    if cfg.seed is None:
        raise ConfigError("--seed is required for forecasting")
    dataset = artifacts.load_artifact(
        _require(args.dataset, "dataset artifact"), artifacts.KIND_DATASET
    )
    book = artifacts.load_artifact(
        _require(args.ratings, "ratings artifact"), artifacts.KIND_RATINGS
    )
    params_artifact = artifacts.load_artifact(
        _require(args.bn_params, "BN parameters artifact"), artifacts.KIND_BN_PARAMS
    )

    n_samples = int(cfg.option("forecast", "n_samples", args.n_samples, 100_000))
    mode = cfg.option("forecast", "mode", args.mode, "hard")
    loocv = not args.no_loocv
    scope = cfg.option("forecast", "scope", args.scope, "odds")

    _, trace = ratings.replay(dataset, book.params)
    fitter = bn.BnFitter(dataset, trace, params_artifact.fit_config)
    if artifacts.artifact_digest(fitter.params()) != artifacts.artifact_digest(params_artifact):
        raise ConfigError(
            "BN parameters artifact does not match a fresh fit of this dataset/ratings pair"
        )

    tasks = []
    for i, match in enumerate(dataset):
        if scope == "odds" and not (
            match.odds_1x2_avg or match.odds_1x2_max or match.odds_ah_avg or match.odds_ah_max
        ):
            continue
        tasks.append((match, float(trace.rd[i]), bn.match_seed(cfg.seed, match.match_id)))

    if cfg.jobs > 1 and len(tasks) > 1:
        chunks = [tasks[i :: cfg.jobs] for i in range(cfg.jobs)]
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [
                pool.submit(_forecast_chunk, fitter, chunk, n_samples, mode, loocv)
                for chunk in chunks
                if chunk
            ]
            records = [r for f in futures for r in f.result()]
        order = {m.match_id: i for i, m in enumerate(dataset)}
        records.sort(key=lambda r: order[r.match_id])
    else:
        records = _forecast_chunk(fitter, tasks, n_samples, mode, loocv)

    out = cfg.out_dir()
    artifacts.save_artifact(out / "forecasts.hla", records)
    cfg.echo("forecast", {"n_samples": n_samples, "mode": mode, "loocv": loocv,
                          "scope": scope, "forecasts": len(records)})
    print(f"forecast {len(records)} matches -> {out / 'forecasts.hla'}")


def cmd_backtest(cfg: RunConfig, args) -> None:
    dataset = artifacts.load_artifact(
        _require(args.dataset, "dataset artifact"), artifacts.KIND_DATASET
    )
    records = artifacts.load_artifact(
        _require(args.forecasts, "forecasts artifact"), artifacts.KIND_FORECASTS
    )
    forecasts = backtest.forecast_index(records)

    markets = cfg.option("backtest", "markets", args.markets, [backtest.MARKET_1X2, backtest.MARKET_AH])
    sources = cfg.option("backtest", "odds_sources", args.odds_sources,
                         [backtest.ODDS_AVG, backtest.ODDS_MAX])
    theta_grid = _parse_grid(
        cfg.option("backtest", "theta_grid", args.theta_grid, None),
        backtest.DEFAULT_THETA_GRID,
    )
    min_season = int(cfg.option("backtest", "min_bets_per_season", args.min_bets_per_season, 30))
    min_static = int(cfg.option("backtest", "min_bets_static", args.min_bets_static, 100))
    stake = float(cfg.option("backtest", "stake", args.stake, 1.0))

    out = cfg.out_dir()
    series: dict[str, list[backtest.CumulativePoint]] = {}
    stake_rows = []
    for source in sources:
        for market in markets:
            reports = backtest.sweep_theta(
                dataset, forecasts, market, source, theta_grid, stake
            )
            backtest.sweep_to_csv(reports, out / f"sweep_{market}_{source}.csv")
            for objective in ("roi", "profit"):
                opt = backtest.optimize_theta(reports, objective, min_season)
                backtest.season_optimization_to_csv(
                    opt, out / f"season_{objective}_{market}_{source}.csv"
                )
                series[f"{market}_{source}_{objective}_per_season"] = (
                    backtest.cumulative_series(opt.pooled_rows)
                )
                try:
                    static = backtest.optimize_theta_static(reports, objective, min_static)
                    series[f"{market}_{source}_{objective}_static"] = static.cumulative
                except ValueError:
                    pass
            profit_static = max(
                (r for r in reports if r.overall.bets), key=lambda r: r.overall.profit,
                default=reports[0],
            )
            artifacts.save_artifact(out / f"report_{market}_{source}.hla", profit_static)

        for key in list(series):
            if not key.startswith(f"{backtest.MARKET_AH}_{source}"):
                continue
            counterpart = key.replace(f"{backtest.MARKET_AH}_", f"{backtest.MARKET_1X2}_", 1)
            if counterpart not in series or not series[key]:
                continue
            try:
                factor, scaled = backtest.stake_match(series[key], series[counterpart])
            except ValueError:
                continue
            series[f"{key}_scaled"] = scaled
            stake_rows.append([key, counterpart, repr(factor)])

    backtest.cumulative_to_csv(series, out / "cumulative.csv")
    if stake_rows:
        _write_csv(out / "stake_match.csv", ["ah_scenario", "onextwo_scenario", "factor"],
                   stake_rows)
    cfg.echo("backtest", {"markets": list(markets), "odds_sources": list(sources),
                          "theta_grid": [float(t) for t in theta_grid],
                          "min_bets_per_season": min_season, "min_bets_static": min_static,
                          "stake": stake})
    print(f"backtest reports written to {out}")


def cmd_report(cfg: RunConfig, args) -> None:
    dataset = artifacts.load_artifact(
        _require(args.dataset, "dataset artifact"), artifacts.KIND_DATASET
    )
    records = artifacts.load_artifact(
        _require(args.forecasts, "forecasts artifact"), artifacts.KIND_FORECASTS
    )
    forecasts = backtest.forecast_index(records)

    fc_list, obs_list, seasons = [], [], []
    for match in dataset:
        fc = forecasts.get(match.match_id)
        if fc is None:
            continue
        gd = match.goal_difference
        if fc.p_1x2 is not None:
            fc_list.append(fc.p_1x2)
            obs_list.append(metrics.OutcomeObs(
                metrics.Market.ONE_X_TWO, 0 if gd > 0 else (1 if gd == 0 else 2)
            ))
            seasons.append(match.season)
        if fc.ah_home is not None and match.ah_line is not None:
            winner = ah.ah_outcome(gd, ah.HandicapLine(match.ah_line))
            fc_list.append(fc.ah_home)
            obs_list.append(metrics.OutcomeObs(
                metrics.Market.AH,
                0 if winner is not ah.Side.AWAY else 1,
                voided=winner is None,
            ))
            seasons.append(match.season)

    out = cfg.out_dir()
    table = metrics.season_table(fc_list, obs_list, seasons)
    metrics.table_to_csv(table, out / "accuracy.csv")

    by_season: dict[str, list] = {}
    for match in dataset:
        if match.odds_ah_avg or match.odds_ah_max:
            by_season.setdefault(match.season, []).append(match)
    odds_rows = []
    for season in sorted(by_season):
        group = by_season[season]
        avg = [m.odds_ah_avg for m in group if m.odds_ah_avg]
        mx = [m.odds_ah_max for m in group if m.odds_ah_max]
        odds_rows.append([
            season,
            repr(sum(o[0] for o in avg) / len(avg)) if avg else "",
            repr(sum(o[1] for o in avg) / len(avg)) if avg else "",
            repr(sum(o[0] for o in mx) / len(mx)) if mx else "",
            repr(sum(o[1] for o in mx) / len(mx)) if mx else "",
        ])
    _write_csv(out / "mean_ah_odds.csv",
               ["season", "avg_home", "avg_away", "max_home", "max_away"], odds_rows)
    cfg.echo("report", {"scored_entries": len(fc_list)})
    print(f"accuracy and odds reports written to {out}")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="handicap-lab",
        description="Pi-rating + Beta-Binomial forecasts with 1X2/AH betting backtests",
    )
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--seed", type=int, help="global seed for all sampling")
    parser.add_argument("--out", help="output directory (default: out)")
    parser.add_argument("--jobs", type=int, help="parallel workers (default: 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse match CSVs and the possession sidecar")
    p.add_argument("--csv", action="append", help="match CSV (repeatable)")
    p.add_argument("--sidecar", help="possession sidecar CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit-ratings", help="grid-search or fix the rating parameters")
    p.add_argument("--dataset", help="dataset artifact")
    p.add_argument("--lambda", dest="lambda_", type=float, help="fix lambda (skip search)")
    p.add_argument("--gamma", type=float, help="fix gamma (skip search)")
    p.add_argument("--k", type=int, help="fix k (skip search)")
    p.add_argument("--lambda-grid", dest="lambda_grid", help="start:stop:step")
    p.add_argument("--gamma-grid", dest="gamma_grid", help="start:stop:step")
    p.add_argument("--k-grid", dest="k_grid", help="start:stop:step")
    p.add_argument("--new-team-threshold", type=int)
    p.add_argument("--k-rule", choices=[ratings.K_RULE_BOTH_BELOW, ratings.K_RULE_EITHER_BELOW])
    p.set_defaults(func=cmd_fit_ratings)

    p = sub.add_parser("fit-bn", help="fit the Beta-Binomial network per RD level")
    p.add_argument("--dataset", help="dataset artifact")
    p.add_argument("--ratings", help="ratings artifact")
    p.add_argument("--smoothing", type=float)
    p.set_defaults(func=cmd_fit_bn)

    p = sub.add_parser("forecast", help="Monte Carlo forecasts for every in-scope match")
    p.add_argument("--dataset", help="dataset artifact")
    p.add_argument("--ratings", help="ratings artifact")
    p.add_argument("--bn-params", dest="bn_params", help="BN parameters artifact")
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--mode", choices=["hard", "soft"])
    p.add_argument("--no-loocv", action="store_true",
                   help="keep each match in its own training data")
    p.add_argument("--scope", choices=["odds", "all"],
                   help="forecast matches with odds only (default) or all")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("backtest", help="threshold sweeps, optimisations, cumulative series")
    p.add_argument("--dataset", help="dataset artifact")
    p.add_argument("--forecasts", help="forecasts artifact")
    p.add_argument("--markets", nargs="+", choices=[backtest.MARKET_1X2, backtest.MARKET_AH])
    p.add_argument("--odds-sources", dest="odds_sources", nargs="+",
                   choices=[backtest.ODDS_AVG, backtest.ODDS_MAX])
    p.add_argument("--theta-grid", dest="theta_grid", help="start:stop:step")
    p.add_argument("--min-bets-per-season", dest="min_bets_per_season", type=int)
    p.add_argument("--min-bets-static", dest="min_bets_static", type=int)
    p.add_argument("--stake", type=float)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("report", help="accuracy (RPS/Brier) and mean AH odds tables")
    p.add_argument("--dataset", help="dataset artifact")
    p.add_argument("--forecasts", help="forecasts artifact")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args)
        args.func(cfg, args)
    except Exception as exc:  # noqa: BLE001 - single CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
