"""Backend parity: the numba fast path and numpy fallback must agree."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from volharness import kernels


def _random_days(rng, n_days=40):
    lengths = rng.integers(2, 60, n_days)
    flat = rng.standard_normal(int(lengths.sum()))
    offsets = np.zeros(n_days + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    return flat, offsets


def test_active_backend_is_known():
    assert kernels.active_backend() in ("numba", "numpy")


@pytest.mark.skipif(kernels.batch_day_measures_numba is None, reason="numba unavailable")
def test_day_measures_backend_parity():
    rng = np.random.default_rng(42)
    flat, offsets = _random_days(rng)
    for scaled in (True, False):
        out_np = kernels.batch_day_measures_numpy(flat, offsets, 4, scaled)
        out_nb = kernels.batch_day_measures_numba(flat, offsets, 4, scaled)
        for a, b in zip(out_np, out_nb):
            assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@pytest.mark.skipif(kernels.nw_s_matrix_numba is None, reason="numba unavailable")
def test_nw_s_matrix_backend_parity():
    rng = np.random.default_rng(7)
    scores = rng.standard_normal((120, 4))
    starts = np.array([0, 50, 95, 120], dtype=np.int64)
    for lag in (0, 1, 5, 60):
        s_np = kernels.nw_s_matrix_numpy(scores, starts, lag)
        s_nb = kernels.nw_s_matrix_numba(scores, starts, lag)
        assert_allclose(s_np, s_nb, rtol=1e-12, atol=1e-12)


def test_short_day_flagged():
    flat = np.array([1.0, 2.0, -1.0])
    offsets = np.array([0, 1, 3], dtype=np.int64)
    rv, bv, _, _, _, bv_ok = kernels.batch_day_measures_numpy(flat, offsets, 4, True)
    assert not bv_ok[0] and bv_ok[1]
    assert rv[0] == 1.0 and bv[0] == 0.0


def test_nw_groups_block_lags():
    # Two blocks: lag products must never straddle the boundary.
    scores = np.arange(12, dtype=float).reshape(6, 2)
    merged = kernels.nw_s_matrix_numpy(scores, np.array([0, 6], dtype=np.int64), 1)
    split = kernels.nw_s_matrix_numpy(scores, np.array([0, 3, 6], dtype=np.int64), 1)
    w = 1.0 - 1.0 / 2.0
    straddle = np.outer(scores[3], scores[2])
    assert_allclose(merged - split, w * (straddle + straddle.T), rtol=1e-12)
