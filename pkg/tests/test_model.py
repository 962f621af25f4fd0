import numpy as np
import pytest
from numpy.testing import assert_allclose

from helpers import make_series
from volharness.errors import DataError, UsageError
from volharness.model import (
    SpecName,
    build_design,
    get_spec,
    horizon_target,
    list_specs,
    stack_samples,
)

HORIZONS = (1, 5, 22, 66)


def _design_brute(rv, t, transform):
    """Independent re-derivation of the rotated windows."""
    if transform == "weekly":
        return np.mean([rv[t - i] for i in range(1, 5)])
    return np.mean([rv[t - i] for i in range(5, 22)])


class TestSpecRegistry:
    def test_eight_specs(self):
        specs = list_specs()
        assert len(specs) == 8
        assert [s.name.value for s in specs] == [
            "har-rv", "har-semirv", "har-semirv-full", "har-rv-lev",
            "har-semirv-lev", "har-jv", "har-sjv", "har-bv",
        ]
        for s in specs:
            assert s.labels[0] == "intercept"
            assert len(set(s.labels)) == len(s.labels)

    def test_semirv_columns(self):
        spec = get_spec("har-semirv")
        assert spec.labels == ("intercept", "rv_neg_lag1", "rv_pos_lag1", "rv_weekly", "rv_monthly")

    def test_sjv_columns(self):
        spec = get_spec("har-sjv")
        assert spec.labels == (
            "intercept", "sjv_neg_lag1", "sjv_pos_lag1", "bv_lag1", "rv_weekly", "rv_monthly",
        )

    def test_bv_columns(self):
        spec = get_spec("har-bv")
        assert spec.labels == ("intercept", "bv_lag1", "rv_weekly", "rv_monthly")

    def test_full_semirv_signed_windows(self):
        spec = get_spec("har-semirv-full")
        assert spec.labels == (
            "intercept", "rv_neg_lag1", "rv_pos_lag1",
            "rv_neg_weekly", "rv_pos_weekly", "rv_neg_monthly", "rv_pos_monthly",
        )

    def test_unknown_name_lists_valid(self):
        with pytest.raises(UsageError, match="har-rv.*har-bv"):
            get_spec("nonsense")


class TestHorizonTarget:
    def test_two_day_average(self):
        series = make_series("A", [1.0, 2.0, 3.0, 4.0, 5.0])
        assert horizon_target(series, 0, 2) == 2.5

    def test_h1_is_next_day(self):
        series = make_series("A", [1.0, 2.0, 3.0])
        assert horizon_target(series, 1, 1) == 3.0

    def test_constant_series(self):
        series = make_series("A", np.full(30, 7.0))
        for h in (1, 5, 22):
            assert horizon_target(series, 2, h) == 7.0

    def test_conventions(self):
        series = make_series("A", [1.0, 2.0, 3.0, 4.0, 5.0])
        assert horizon_target(series, 0, 2, "single") == 3.0
        assert horizon_target(series, 0, 2, "sum") == 5.0

    def test_out_of_range(self):
        series = make_series("A", [1.0, 2.0, 3.0])
        with pytest.raises(DataError):
            horizon_target(series, 1, 2)


class TestBuildDesign:
    def test_row_count_all_specs_horizons(self):
        rng = np.random.default_rng(0)
        length = 120
        series = make_series("A", rng.uniform(0.5, 2.0, length),
                             daily_return=rng.standard_normal(length))
        for spec in list_specs():
            for h in HORIZONS:
                sample = build_design(series, spec.name, h)
                assert sample.n_obs == length - 21 - h
                assert sample.labels == spec.labels
                assert sample.X[:, 0].tolist() == [1.0] * sample.n_obs

    def test_too_short_names_required_length(self):
        series = make_series("A", np.ones(22))
        with pytest.raises(DataError, match="need 23 days, have 22"):
            build_design(series, "har-rv", 1)

    def test_windows_match_brute_force(self):
        rng = np.random.default_rng(1)
        rv = rng.uniform(0.1, 3.0, 80)
        series = make_series("A", rv)
        sample = build_design(series, "har-rv", 1)
        for row, t in enumerate(range(21, 79)):
            assert_allclose(sample.X[row, 1], rv[t], rtol=1e-15)
            # prefix-sum evaluation differs from naive means only by
            # cancellation noise
            assert_allclose(sample.X[row, 2], _design_brute(rv, t, "weekly"), rtol=1e-9)
            assert_allclose(sample.X[row, 3], _design_brute(rv, t, "monthly"), rtol=1e-9)
            assert_allclose(sample.y[row], rv[t + 1], rtol=1e-9)

    def test_impulse_rotation(self):
        length, d = 80, 40
        rv = np.zeros(length)
        rv[d] = 1.0
        series = make_series("A", rv)
        sample = build_design(series, "har-rv", 1)
        t_idx = np.arange(21, length - 1)
        daily, weekly, monthly = sample.X[:, 1], sample.X[:, 2], sample.X[:, 3]
        assert np.flatnonzero(daily).tolist() == [d - 21]
        assert (t_idx[np.flatnonzero(weekly)] == np.arange(d + 1, d + 5)).all()
        assert (t_idx[np.flatnonzero(monthly)] == np.arange(d + 5, d + 22)).all()
        active = (daily != 0).astype(int) + (weekly != 0).astype(int) + (monthly != 0).astype(int)
        assert active.max() <= 1

    def test_constant_series_columns_equal(self):
        series = make_series("A", np.full(60, 3.0))
        sample = build_design(series, "har-rv", 1)
        assert np.all(sample.X[:, 1] == 3.0)
        assert_allclose(sample.X[:, 2], 3.0, rtol=1e-15)
        assert_allclose(sample.X[:, 3], 3.0, rtol=1e-15)

    def test_leverage_indicator(self):
        length = 40
        rv = np.full(length, 2.0)
        dr = np.zeros(length)
        dr[25] = -0.5
        dr[26] = 0.5
        series = make_series("A", rv, daily_return=dr)
        sample = build_design(series, "har-rv-lev", 1)
        gamma = sample.X[:, sample.labels.index("rv_down_lag1")]
        assert gamma[25 - 21] == 2.0
        assert gamma[26 - 21] == 0.0
        assert gamma.sum() == 2.0  # only the one negative-return day

    def test_semirv_lag_columns_sum_to_rv(self):
        rng = np.random.default_rng(2)
        rv = rng.uniform(0.1, 2.0, 70)
        pos = rng.uniform(0, 1, 70) * rv
        series = make_series("A", rv, rv_pos=pos, rv_neg=rv - pos)
        base = build_design(series, "har-rv", 1)
        semi = build_design(series, "har-semirv", 1)
        lag_sum = semi.X[:, semi.labels.index("rv_neg_lag1")] + semi.X[
            :, semi.labels.index("rv_pos_lag1")
        ]
        assert_allclose(lag_sum, base.X[:, 1], rtol=1e-12)

    def test_no_lookahead_no_leak(self):
        # Impulse in rv hits targets only for rows t in {d-h .. d-1}.
        length, d, h = 100, 60, 5
        rv = np.zeros(length)
        rv[d] = 1.0
        series = make_series("A", rv)
        sample = build_design(series, "har-rv", h)
        t_idx = np.arange(21, length - h)
        hit = np.flatnonzero(sample.y != 0.0)
        assert (t_idx[hit] == np.arange(d - h, d)).all()

    def test_non_finite_rejected(self):
        rv = np.ones(40)
        rv[25] = np.nan
        series = make_series("A", rv)
        with pytest.raises(DataError, match="non-finite"):
            build_design(series, "har-rv", 1)

    def test_lags_are_positional_over_calendar_gaps(self):
        # Weekend-style gaps close up: the lag structure counts retained
        # days, not calendar days.
        from dataclasses import replace
        from datetime import timedelta

        rng = np.random.default_rng(5)
        rv = rng.uniform(0.5, 2.0, 60)
        contiguous = make_series("A", rv)
        gapped_days = tuple(
            replace(d, date=d.date + timedelta(days=2 * i))
            for i, d in enumerate(contiguous.days)
        )
        from volharness.estimators import MeasureSeries

        gapped = MeasureSeries("A", "crypto", gapped_days)
        a = build_design(contiguous, "har-rv", 1)
        b = build_design(gapped, "har-rv", 1)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)


class TestStack:
    def test_blocks_and_order(self):
        rng = np.random.default_rng(3)
        a = build_design(make_series("A", rng.uniform(0.5, 1.5, 40)), "har-rv", 1)
        b = build_design(make_series("B", rng.uniform(0.5, 1.5, 50)), "har-rv", 1)
        stacked = stack_samples([a, b])
        assert stacked.n_obs == a.n_obs + b.n_obs
        assert stacked.group_starts.tolist() == [0, a.n_obs, a.n_obs + b.n_obs]
        assert stacked.symbols[0] == "A" and stacked.symbols[-1] == "B"

    def test_mismatched_specs_rejected(self):
        rng = np.random.default_rng(4)
        a = build_design(make_series("A", rng.uniform(0.5, 1.5, 40)), "har-rv", 1)
        b = build_design(make_series("B", rng.uniform(0.5, 1.5, 40)), "har-bv", 1)
        with pytest.raises(UsageError):
            stack_samples([a, b])

    def test_spec_enum_round_trip(self):
        for name in SpecName:
            assert get_spec(name.value).name is name
