"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Backend selection, checked once at import time via ``VOLHARNESS_BACKEND``:

* ``auto`` (default) — numba when importable, else numpy
* ``numba``          — require numba, fail loudly if missing
* ``numpy``          — force the vectorized fallback

Both implementations of each kernel are exported (``*_numpy`` and, when
available, ``*_numba``) so parity tests and the benchmark can address them
directly; the unsuffixed names are the active dispatch.
"""

import os

import numpy as np

from .errors import UsageError

_HALF_PI = np.pi / 2.0


def _select_backend() -> str:
    requested = os.environ.get("VOLHARNESS_BACKEND", "auto").strip().lower()
    if requested not in ("auto", "numba", "numpy"):
        raise UsageError(
            f"VOLHARNESS_BACKEND must be one of auto|numba|numpy, got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise UsageError("VOLHARNESS_BACKEND=numba but numba is not importable")
        return "numpy"
    return "numba"


_BACKEND = _select_backend()


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return _BACKEND


# ---------------------------------------------------------------------------
# Daily realized measures over a batch of days.
#
# flat_returns holds all days' percent returns back to back; day d occupies
# flat_returns[offsets[d]:offsets[d + 1]].  Outputs per day: realized
# variance, skip-averaged bipower variation, signed semivariances, summed
# daily return, and a flag for days too short to define BV (n < 2).
# ---------------------------------------------------------------------------


def batch_day_measures_numpy(flat_returns, offsets, bv_skips, scaled):
    n_days = offsets.size - 1
    rv = np.zeros(n_days)
    bv = np.zeros(n_days)
    rv_pos = np.zeros(n_days)
    rv_neg = np.zeros(n_days)
    daily_ret = np.zeros(n_days)
    bv_ok = np.zeros(n_days, dtype=np.bool_)
    for d in range(n_days):
        r = flat_returns[offsets[d]:offsets[d + 1]]
        n = r.size
        sq = r * r
        rv[d] = sq.sum()
        rv_pos[d] = sq[r > 0.0].sum()
        rv_neg[d] = sq[r < 0.0].sum()
        daily_ret[d] = r.sum()
        if n < 2:
            continue
        a = np.abs(r)
        acc = 0.0
        n_feasible = 0
        for q in range(bv_skips + 1):
            if n < q + 2:
                break
            s = float(np.dot(a[q + 1:], a[:n - q - 1]))
            scale = n / (n - q - 1) if scaled else 1.0
            acc += _HALF_PI * scale * s
            n_feasible += 1
        bv[d] = acc / n_feasible
        bv_ok[d] = True
    return rv, bv, rv_pos, rv_neg, daily_ret, bv_ok


# ---------------------------------------------------------------------------
# Newey-West middle matrix.
#
# scores is the n x k matrix of per-row score vectors x_t * e_t (already
# weighted for WLS).  group_starts are the block boundaries (length
# n_groups + 1, last entry n); rows inside a block are time-ordered and
# lagged cross-products never straddle a block.  Bartlett weights use the
# requested bandwidth; blocks shorter than the bandwidth contribute the
# lags they have (the caller warns about the truncation).
# ---------------------------------------------------------------------------


def nw_s_matrix_numpy(scores, group_starts, lag):
    k = scores.shape[1]
    s_mat = scores.T @ scores
    for lg in range(1, lag + 1):
        w = 1.0 - lg / (lag + 1.0)
        gamma = np.zeros((k, k))
        for g in range(group_starts.size - 1):
            lo = group_starts[g]
            hi = group_starts[g + 1]
            if hi - lo <= lg:
                continue
            gamma += scores[lo + lg:hi].T @ scores[lo:hi - lg]
        s_mat += w * (gamma + gamma.T)
    return s_mat


batch_day_measures_numba = None
nw_s_matrix_numba = None

if _BACKEND == "numba":
    from numba import njit

    @njit(cache=True)
    def _batch_day_measures_nb(flat_returns, offsets, bv_skips, scaled):  # pragma: no cover - numba
        n_days = offsets.size - 1
        rv = np.zeros(n_days)
        bv = np.zeros(n_days)
        rv_pos = np.zeros(n_days)
        rv_neg = np.zeros(n_days)
        daily_ret = np.zeros(n_days)
        bv_ok = np.zeros(n_days, dtype=np.bool_)
        for d in range(n_days):
            lo = offsets[d]
            hi = offsets[d + 1]
            n = hi - lo
            for i in range(lo, hi):
                x = flat_returns[i]
                sq = x * x
                rv[d] += sq
                if x > 0.0:
                    rv_pos[d] += sq
                elif x < 0.0:
                    rv_neg[d] += sq
                daily_ret[d] += x
            if n < 2:
                continue
            acc = 0.0
            n_feasible = 0
            for q in range(bv_skips + 1):
                if n < q + 2:
                    break
                s = 0.0
                for i in range(lo + q + 1, hi):
                    s += abs(flat_returns[i]) * abs(flat_returns[i - 1 - q])
                scale = n / (n - q - 1.0) if scaled else 1.0
                acc += _HALF_PI * scale * s
                n_feasible += 1
            bv[d] = acc / n_feasible
            bv_ok[d] = True
        return rv, bv, rv_pos, rv_neg, daily_ret, bv_ok

    @njit(cache=True)
    def _nw_s_matrix_nb(scores, group_starts, lag):  # pragma: no cover - numba
        n, k = scores.shape
        s_mat = np.zeros((k, k))
        for t in range(n):
            for i in range(k):
                for j in range(k):
                    s_mat[i, j] += scores[t, i] * scores[t, j]
        for lg in range(1, lag + 1):
            w = 1.0 - lg / (lag + 1.0)
            for g in range(group_starts.size - 1):
                lo = group_starts[g]
                hi = group_starts[g + 1]
                if hi - lo <= lg:
                    continue
                for t in range(lo + lg, hi):
                    for i in range(k):
                        for j in range(k):
                            v = w * scores[t, i] * scores[t - lg, j]
                            s_mat[i, j] += v
                            s_mat[j, i] += v
        return s_mat

    def batch_day_measures_numba(flat_returns, offsets, bv_skips, scaled):
        return _batch_day_measures_nb(
            np.ascontiguousarray(flat_returns, dtype=np.float64),
            np.ascontiguousarray(offsets, dtype=np.int64),
            int(bv_skips),
            bool(scaled),
        )

    def nw_s_matrix_numba(scores, group_starts, lag):
        return _nw_s_matrix_nb(
            np.ascontiguousarray(scores, dtype=np.float64),
            np.ascontiguousarray(group_starts, dtype=np.int64),
            int(lag),
        )

    batch_day_measures = batch_day_measures_numba
    nw_s_matrix = nw_s_matrix_numba
else:
    batch_day_measures = batch_day_measures_numpy
    nw_s_matrix = nw_s_matrix_numpy
