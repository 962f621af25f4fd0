import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from helpers import make_series
from volharness.errors import BvUndefinedError, DataError, UsageError
from volharness.estimators import (
    build_series,
    correlation_matrix,
    daily_measures,
    descriptive_stats,
    read_measures_csv,
    write_measures_csv,
)

D = date(2021, 1, 1)


class TestDailyMeasures:
    def test_hand_example(self):
        m = daily_measures([1.0, -2.0, 3.0])
        assert m.rv == 14.0
        assert m.rv_pos == 10.0
        assert m.rv_neg == 4.0
        assert m.sjv == 6.0
        assert m.sjv_pos == 6.0
        assert m.sjv_neg == 0.0
        assert m.daily_return == 2.0
        assert m.n_obs == 3

    def test_skip0_bv_hand_value(self):
        # (pi/2) * (3/2) * (|-2||1| + |3||-2|) = 6*pi
        m = daily_measures([1.0, -2.0, 3.0], bv_skips=0)
        assert_allclose(m.bv, 6.0 * math.pi, rtol=1e-15)

    def test_skip_average_drops_infeasible(self):
        # n=3: skip-0 feasible (6*pi), skip-1 feasible ((pi/2)*3*3 = 4.5*pi),
        # skips 2..4 infeasible -> mean of the two.
        m = daily_measures([1.0, -2.0, 3.0], bv_skips=4)
        assert_allclose(m.bv, 5.25 * math.pi, rtol=1e-15)

    def test_scaling_toggle(self):
        m = daily_measures([1.0, -2.0, 3.0], bv_skips=0, bv_scaling=False)
        assert_allclose(m.bv, 4.0 * math.pi, rtol=1e-15)  # (pi/2) * 8

    def test_all_zero_returns(self):
        m = daily_measures(np.zeros(10))
        assert (m.rv, m.bv, m.rv_pos, m.rv_neg, m.sjv, m.sjv_pos, m.sjv_neg, m.daily_return) == (
            0.0,) * 8

    def test_zero_returns_feed_neither_semivariance(self):
        m = daily_measures([0.0, 2.0, 0.0, -1.0])
        assert m.rv_pos == 4.0 and m.rv_neg == 1.0
        assert m.rv == m.rv_pos + m.rv_neg

    def test_empty_precondition(self):
        with pytest.raises(DataError):
            daily_measures([])

    def test_single_return_bv_undefined(self):
        with pytest.raises(BvUndefinedError):
            daily_measures([1.5])

    def test_rv_permutation_invariant_bv_not(self):
        a = daily_measures([1.0, -2.0, 3.0, 0.5])
        b = daily_measures([3.0, 0.5, 1.0, -2.0])
        assert a.rv == b.rv
        assert a.bv != b.bv

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=40),
        st.floats(0.01, 100.0),
    )
    def test_scaling_property(self, returns, c):
        base = daily_measures(returns)
        scaled = daily_measures(c * np.asarray(returns))
        for fld in ("rv", "bv", "rv_pos", "rv_neg", "sjv", "sjv_pos", "sjv_neg"):
            assert_allclose(getattr(scaled, fld), c * c * getattr(base, fld),
                            rtol=1e-9, atol=1e-12)
        assert_allclose(scaled.daily_return, c * base.daily_return, rtol=1e-9, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=60))
    def test_identities_property(self, returns):
        m = daily_measures(returns)
        assert_allclose(m.rv, m.rv_pos + m.rv_neg, rtol=1e-12, atol=1e-12)
        assert_allclose(m.sjv, m.rv_pos - m.rv_neg, rtol=1e-12, atol=1e-12)
        assert m.sjv_pos + m.sjv_neg == m.sjv
        assert m.sjv_pos * m.sjv_neg == 0.0
        assert m.sjv_pos >= 0.0 >= m.sjv_neg
        assert m.rv >= 0.0 and m.bv >= 0.0


class TestBuildSeries:
    def test_shuffled_days_ordered(self):
        days = {
            date(2021, 1, 3): [1.0, 2.0],
            date(2021, 1, 1): [0.5, -0.5],
            date(2021, 1, 2): [1.0, -1.0],
        }
        series, excluded = build_series("BTC", "crypto", days)
        assert series.dates() == [date(2021, 1, 1), date(2021, 1, 2), date(2021, 1, 3)]
        assert excluded == []

    def test_single_return_day_excluded(self):
        days = {date(2021, 1, 1): [1.0, -1.0], date(2021, 1, 2): [2.0]}
        series, excluded = build_series("BTC", "crypto", days)
        assert len(series) == 1
        (ex,) = excluded
        assert ex.reason == "bv_undefined"
        assert ex.date == date(2021, 1, 2)

    def test_duplicate_dates_error(self):
        days = [(date(2021, 1, 1), [1.0, 2.0]), (date(2021, 1, 1), [3.0, 4.0])]
        with pytest.raises(DataError, match="duplicate date"):
            build_series("BTC", "crypto", days)

    def test_no_valid_days_error(self):
        with pytest.raises(DataError):
            build_series("BTC", "crypto", {date(2021, 1, 1): [2.0]})

    def test_matches_daily_measures(self):
        rng = np.random.default_rng(5)
        days = {date(2021, 1, 1 + i): rng.standard_normal(30) for i in range(4)}
        series, _ = build_series("BTC", "crypto", days)
        for rec in series.days:
            direct = daily_measures(days[rec.date], day=rec.date)
            assert rec == direct


class TestDescriptiveStats:
    def test_three_value_fixture(self):
        series = make_series("A", [1.0, 2.0, 3.0])
        (row,) = descriptive_stats([series], measures=("rv",))
        assert row.mean == 2.0
        assert row.q50 == 2.0
        assert row.n_obs == 3

    def test_constant_measure(self):
        series = make_series("A", [4.0, 4.0, 4.0])
        (row,) = descriptive_stats([series], measures=("rv",))
        assert row.std == 0.0
        assert row.q05 == row.q25 == row.q50 == row.q75 == row.q95 == 4.0

    def test_pooled_mean(self):
        panel = [make_series("A", [1.0, 2.0]), make_series("B", [3.0, 4.0])]
        (row,) = descriptive_stats(panel, measures=("rv",))
        assert row.mean == 2.5

    def test_five_value_hand_arithmetic(self):
        series = make_series("A", [1.0, 2.0, 3.0, 4.0, 5.0])
        (row,) = descriptive_stats([series], measures=("rv",))
        assert row.mean == 3.0
        assert row.std == math.sqrt(2.0)  # population denominator
        assert (row.q05, row.q25, row.q50, row.q75, row.q95) == (1.2, 2.0, 3.0, 4.0, 4.8)

    def test_sample_std_flag(self):
        series = make_series("A", [1.0, 2.0, 3.0, 4.0, 5.0])
        (row,) = descriptive_stats([series], measures=("rv",), ddof=1)
        assert row.std == math.sqrt(2.5)

    def test_groups_by_asset_class(self):
        panel = [
            make_series("A", [1.0, 2.0], asset_class="crypto"),
            make_series("B", [3.0, 4.0], asset_class="equity"),
        ]
        rows = descriptive_stats(panel, measures=("rv",))
        assert [(r.asset_class, r.mean) for r in rows] == [("crypto", 1.5), ("equity", 3.5)]

    def test_unknown_measure(self):
        with pytest.raises(UsageError, match="unknown measure"):
            descriptive_stats([make_series("A", [1.0])], measures=("vol",))

    def test_empty_panel(self):
        with pytest.raises(DataError):
            descriptive_stats([])


class TestCorrelation:
    def test_self_correlation_is_one(self):
        rng = np.random.default_rng(1)
        series = make_series("A", rng.uniform(0.5, 2.0, 50))
        (corr,) = correlation_matrix([series], measures=("rv", "bv"))
        assert corr.values[0, 0] == 1.0 and corr.values[1, 1] == 1.0

    def test_rv_vs_semivariance_sum(self):
        rng = np.random.default_rng(2)
        rv = rng.uniform(0.5, 2.0, 100)
        pos = rng.uniform(0.0, 1.0, 100) * rv
        series = make_series("A", rv, rv_pos=pos, rv_neg=rv - pos)
        (corr,) = correlation_matrix([series], measures=("rv", "rv_pos", "rv_neg"))
        # corr(rv, rv_pos + rv_neg) = 1 exactly; check via the identity columns
        pooled = np.column_stack([rv, pos + (rv - pos)])
        r = np.corrcoef(pooled.T)[0, 1]
        assert_allclose(r, 1.0, atol=1e-12)
        assert corr.values.shape == (3, 3)
        assert_allclose(corr.values, corr.values.T, atol=1e-15)

    def test_orthogonal_vectors(self):
        series = make_series(
            "A", [1.0, -1.0, 1.0, -1.0], bv=[1.0, 1.0, -1.0, -1.0]
        )
        (corr,) = correlation_matrix([series], measures=("rv", "bv"))
        assert_allclose(corr.values[0, 1], 0.0, atol=1e-15)

    def test_zero_variance_flagged(self):
        series = make_series("A", [1.0, 2.0, 3.0], bv=[1.0, 1.0, 1.0])
        (corr,) = correlation_matrix([series], measures=("rv", "bv"))
        assert math.isnan(corr.values[0, 1]) and math.isnan(corr.values[1, 0])
        assert corr.values[1, 1] == 1.0

    def test_needs_two_observations(self):
        series = make_series("A", [1.0])
        with pytest.raises(DataError):
            correlation_matrix([series], measures=("rv", "bv"))


class TestMeasuresCsv:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(9)
        days = {date(2021, 1, 1 + i): rng.standard_normal(40) for i in range(6)}
        series, _ = build_series("BTC", "crypto", days)
        path = tmp_path / "measures.csv"
        write_measures_csv([series], path)
        (back,) = read_measures_csv(path)
        assert back.symbol == "BTC"
        assert back.asset_class is None  # class is not part of the schema
        for a, b in zip(series.days, back.days):
            assert a == b  # exact float round trip via repr

    def test_header_schema(self, tmp_path):
        series = make_series("A", [1.0, 2.0])
        path = tmp_path / "m.csv"
        write_measures_csv([series], path)
        head = path.read_text(encoding="utf-8").splitlines()[0]
        assert head == "symbol,date,n_obs,rv,bv,rv_pos,rv_neg,sjv,sjv_pos,sjv_neg,daily_return"

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(DataError):
            read_measures_csv(path)
