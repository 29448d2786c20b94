"""Benchmark the rating replay loop: compiled kernel vs pure Python.

The replay is the inner loop of the parameter grid search (default grids
evaluate 21,000 combinations), so per-replay time dominates fit-ratings.

Usage: python benchmarks/bench_replay.py [--teams 20] [--seasons 27]
       [--points 50] [--repeat 3]
"""

import argparse
import time

from handicap_lab import _replay_py, ratings
from handicap_lab.synthetic import make_league

try:
    from handicap_lab import _replay_cy
except ImportError:
    _replay_cy = None


def time_backend(backend, encoded, points, repeat):
    team_index, hi, ai, hg, ag = encoded
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for lam, gam, k in points:
            backend.replay_encoded(hi, ai, hg, ag, len(team_index),
                                   lam, gam, k, 38, False)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--teams", type=int, default=20)
    parser.add_argument("--seasons", type=int, default=27)
    parser.add_argument("--points", type=int, default=50,
                        help="grid points to replay per timing run")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    league = make_league(n_teams=args.teams, n_seasons=args.seasons,
                         seed=args.seed, with_odds=False)
    encoded = ratings._encode(league.dataset)
    n_matches = len(league.dataset)
    points = [(0.001 + 0.002 * (i % 30), 0.05 * (i % 21), float(1 + i % 10))
              for i in range(args.points)]
    updates = n_matches * len(points)

    print(f"{n_matches} matches x {len(points)} grid points "
          f"({updates:,} rating updates), best of {args.repeat}")

    results = {}
    backends = [("python", _replay_py)]
    if _replay_cy is not None:
        backends.insert(0, ("cython", _replay_cy))
    else:
        print("compiled kernel not built; timing pure Python only")

    for name, backend in backends:
        elapsed = time_backend(backend, encoded, points, args.repeat)
        results[name] = elapsed
        print(f"  {name:>7}: {elapsed:8.3f}s  "
              f"({updates / elapsed / 1e6:7.1f} M updates/s)")

    if len(results) == 2:
        speedup = results["python"] / results["cython"]
        grid = 21_000 * n_matches
        print(f"  speedup: {speedup:.1f}x")
        for name in ("cython", "python"):
            full = results[name] / updates * grid
            print(f"  projected full default grid ({name}): {full:,.0f}s")

    # sanity: identical outputs
    if _replay_cy is not None:
        team_index, hi, ai, hg, ag = encoded
        a = _replay_cy.replay_encoded(hi, ai, hg, ag, len(team_index),
                                      0.018, 0.7, 3.0, 38, False)
        b = _replay_py.replay_encoded(hi, ai, hg, ag, len(team_index),
                                      0.018, 0.7, 3.0, 38, False)
        assert all((x == y).all() for x, y in zip(a, b)), "backend mismatch"
        print("  outputs identical across backends")


if __name__ == "__main__":
    main()
