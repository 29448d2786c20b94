# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rating replay loop; see _replay_py.py for the reference code.

The loop releases the GIL so grid-search points can run on threads.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def replay_encoded(home_idx, away_idx, home_goals, away_goals, int n_teams,
                   double lam, double gamma, double k, int threshold,
                   bint either_below):
    """Sequential pi-rating replay over integer-encoded matches.

    Returns per-match (rating difference, home error, eligibility) arrays
    plus the final per-team home/away ratings and match counters.
    """
    cdef cnp.int64_t[::1] hi_v = np.ascontiguousarray(home_idx, dtype=np.int64)
    cdef cnp.int64_t[::1] ai_v = np.ascontiguousarray(away_idx, dtype=np.int64)
    cdef cnp.int64_t[::1] hg_v = np.ascontiguousarray(home_goals, dtype=np.int64)
    cdef cnp.int64_t[::1] ag_v = np.ascontiguousarray(away_goals, dtype=np.int64)
    cdef Py_ssize_t n = hi_v.shape[0]

    rh_arr = np.zeros(n_teams, dtype=np.float64)
    ra_arr = np.zeros(n_teams, dtype=np.float64)
    played_arr = np.zeros(n_teams, dtype=np.int64)
    rd_arr = np.empty(n, dtype=np.float64)
    err_arr = np.empty(n, dtype=np.float64)
    elig_arr = np.zeros(n, dtype=np.uint8)

    cdef double[::1] rh = rh_arr
    cdef double[::1] ra = ra_arr
    cdef cnp.int64_t[::1] played = played_arr
    cdef double[::1] out_rd = rd_arr
    cdef double[::1] out_err = err_arr
    cdef cnp.uint8_t[::1] out_elig = elig_arr

    cdef Py_ssize_t m, hi, ai
    cdef cnp.int64_t ph, pa
    cdef bint is_new
    cdef double keff, rd, e_h, delta_home, delta_away

    with nogil:
        for m in range(n):
            hi = hi_v[m]
            ai = ai_v[m]
            ph = played[hi]
            pa = played[ai]
            out_elig[m] = ph >= threshold and pa >= threshold
            if either_below:
                is_new = ph < threshold or pa < threshold
            else:
                is_new = ph < threshold and pa < threshold
            keff = k if is_new else 1.0

            rd = rh[hi] - ra[ai]
            e_h = (hg_v[m] - ag_v[m]) - rd
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

    return (rd_arr, err_arr, elig_arr.astype(bool), rh_arr, ra_arr, played_arr)
