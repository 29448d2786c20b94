"""Pure-Python rating replay loop, the fallback for the compiled kernel.

Must stay arithmetically identical to ``_replay_cy.pyx``: same expression
order, same IEEE double operations, so both backends produce bit-equal
traces.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def replay_encoded(home_idx, away_idx, home_goals, away_goals, n_teams,
                   lam, gamma, k, threshold, either_below):
    """Sequential pi-rating replay over integer-encoded matches.

    Returns per-match (rating difference, home error, eligibility) arrays
    plus the final per-team home/away ratings and match counters.
    """
    hi_list = np.asarray(home_idx).tolist()
    ai_list = np.asarray(away_idx).tolist()
    hg_list = np.asarray(home_goals).tolist()
    ag_list = np.asarray(away_goals).tolist()
    n = len(hi_list)

    rh = [0.0] * n_teams
    ra = [0.0] * n_teams
    played = [0] * n_teams
    out_rd = [0.0] * n
    out_err = [0.0] * n
    out_elig = [False] * n

    lam = float(lam)
    gamma = float(gamma)
    k = float(k)

    for m in range(n):
        hi = hi_list[m]
        ai = ai_list[m]
        ph = played[hi]
        pa = played[ai]
        out_elig[m] = ph >= threshold and pa >= threshold
        if either_below:
            is_new = ph < threshold or pa < threshold
        else:
            is_new = ph < threshold and pa < threshold
        keff = k if is_new else 1.0

        rd = rh[hi] - ra[ai]
        e_h = (hg_list[m] - ag_list[m]) - rd
        delta_home = e_h * lam * keff
        delta_away = -delta_home

        rh[hi] += delta_home
        ra[hi] += gamma * delta_home
        ra[ai] += delta_away
        rh[ai] += gamma * delta_away
        played[hi] = ph + 1
        played[ai] = pa + 1

        out_rd[m] = rd
        out_err[m] = e_h

    return (
        np.array(out_rd, dtype=np.float64),
        np.array(out_err, dtype=np.float64),
        np.array(out_elig, dtype=bool),
        np.array(rh, dtype=np.float64),
        np.array(ra, dtype=np.float64),
        np.array(played, dtype=np.int64),
    )
