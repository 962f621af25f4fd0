"""HAR-family model specifications and design-matrix construction.

The eight specifications share a rotated lag layout: the day-t regressors,
a weekly average over lags 1-4, and a monthly average over lags 5-21, so
no observation enters two windows.  Targets look h days ahead; the first
21 days and last h days of a series are never rows.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError, UsageError

BURN_IN = 21  # deepest lag used by the monthly window
WEEKLY_SPAN = 4  # lags 1..4
MONTHLY_SPAN = 17  # lags 5..21

TARGET_CONVENTIONS = ("average", "single", "sum")


class SpecName(str, Enum):
    HAR_RV = "har-rv"
    HAR_SEMIRV = "har-semirv"
    HAR_SEMIRV_FULL = "har-semirv-full"
    HAR_RV_LEV = "har-rv-lev"
    HAR_SEMIRV_LEV = "har-semirv-lev"
    HAR_JV = "har-jv"
    HAR_SJV = "har-sjv"
    HAR_BV = "har-bv"


@dataclass(frozen=True)
class Column:
    """One regressor: a source measure and how it is transformed."""

    measure: str
    transform: str  # lag1 | weekly_avg | monthly_avg | neg_return_interaction
    label: str


@dataclass(frozen=True)
class ModelSpec:
    name: SpecName
    columns: tuple  # Column, ... (the intercept is implicit and always first)

    @property
    def labels(self) -> tuple:
        return ("intercept",) + tuple(c.label for c in self.columns)


def _cols(*triples) -> tuple:
    return tuple(Column(*t) for t in triples)


_SPECS = {
    SpecName.HAR_RV: _cols(
        ("rv", "lag1", "rv_lag1"),
        ("rv", "weekly_avg", "rv_weekly"),
        ("rv", "monthly_avg", "rv_monthly"),
    ),
    SpecName.HAR_SEMIRV: _cols(
        ("rv_neg", "lag1", "rv_neg_lag1"),
        ("rv_pos", "lag1", "rv_pos_lag1"),
        ("rv", "weekly_avg", "rv_weekly"),
        ("rv", "monthly_avg", "rv_monthly"),
    ),
    SpecName.HAR_SEMIRV_FULL: _cols(
        ("rv_neg", "lag1", "rv_neg_lag1"),
        ("rv_pos", "lag1", "rv_pos_lag1"),
        ("rv_neg", "weekly_avg", "rv_neg_weekly"),
        ("rv_pos", "weekly_avg", "rv_pos_weekly"),
        ("rv_neg", "monthly_avg", "rv_neg_monthly"),
        ("rv_pos", "monthly_avg", "rv_pos_monthly"),
    ),
    SpecName.HAR_RV_LEV: _cols(
        ("rv", "lag1", "rv_lag1"),
        ("rv", "neg_return_interaction", "rv_down_lag1"),
        ("rv", "weekly_avg", "rv_weekly"),
        ("rv", "monthly_avg", "rv_monthly"),
    ),
    SpecName.HAR_SEMIRV_LEV: _cols(
        ("rv_neg", "lag1", "rv_neg_lag1"),
        ("rv_pos", "lag1", "rv_pos_lag1"),
        ("rv", "neg_return_interaction", "rv_down_lag1"),
        ("rv", "weekly_avg", "rv_weekly"),
        ("rv", "monthly_avg", "rv_monthly"),
    ),
    SpecName.HAR_JV: _cols(
        ("sjv", "lag1", "sjv_lag1"),
        ("bv", "lag1", "bv_lag1"),
        ("rv", "weekly_avg", "rv_weekly"),
        ("rv", "monthly_avg", "rv_monthly"),
    ),
    SpecName.HAR_SJV: _cols(
        ("sjv_neg", "lag1", "sjv_neg_lag1"),
        ("sjv_pos", "lag1", "sjv_pos_lag1"),
        ("bv", "lag1", "bv_lag1"),
        ("rv", "weekly_avg", "rv_weekly"),
        ("rv", "monthly_avg", "rv_monthly"),
    ),
    SpecName.HAR_BV: _cols(
        ("bv", "lag1", "bv_lag1"),
        ("rv", "weekly_avg", "rv_weekly"),
        ("rv", "monthly_avg", "rv_monthly"),
    ),
}


def list_specs() -> list:
    """All eight specifications in their canonical order."""
    return [ModelSpec(name, _SPECS[name]) for name in SpecName]


def get_spec(name) -> ModelSpec:
    if isinstance(name, ModelSpec):
        return name
    try:
        key = SpecName(name)
    except ValueError:
        valid = ", ".join(s.value for s in SpecName)
        raise UsageError(f"unknown spec {name!r}; valid specs: {valid}") from None
    return ModelSpec(key, _SPECS[key])


@dataclass(frozen=True)
class RegressionSample:
    """Aligned target/regressor rows, optionally stacked across entities."""

    y: np.ndarray
    X: np.ndarray
    labels: tuple
    symbols: tuple  # per-row entity key
    dates: tuple  # per-row anchor date (day t)
    horizon: int
    spec: SpecName
    group_starts: np.ndarray  # entity block boundaries, len = n_groups + 1

    def __post_init__(self):
        n, k = self.X.shape
        if self.y.shape != (n,) or len(self.labels) != k:
            raise DataError("misaligned regression sample")
        if len(self.symbols) != n or len(self.dates) != n:
            raise DataError("misaligned regression sample index")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise DataError("regression sample contains non-finite values")

    @property
    def n_obs(self) -> int:
        return int(self.y.size)

    @property
    def n_params(self) -> int:
        return int(self.X.shape[1])


def _prefix_sums(values: np.ndarray) -> np.ndarray:
    out = np.zeros(values.size + 1)
    np.cumsum(values, out=out[1:])
    return out


def horizon_target(series, t: int, h: int, convention: str = "average") -> float:
    """Target value for anchor day t: the next h days' rv, averaged by default."""
    if convention not in TARGET_CONVENTIONS:
        raise UsageError(f"target convention must be one of {TARGET_CONVENTIONS}")
    if h < 1:
        raise UsageError(f"horizon must be >= 1, got {h}")
    if t < 0 or t + h > len(series) - 1:
        raise DataError(f"target window t+1..t+h exceeds series length (t={t}, h={h})")
    rv = series.values("rv")
    window = rv[t + 1 : t + 1 + h]
    if convention == "single":
        return float(rv[t + h])
    if convention == "sum":
        return float(window.sum())
    return float(window.mean())


def build_design(series, spec, h: int, target: str = "average") -> RegressionSample:
    """Construct the aligned (y, X) sample for one series and one horizon.

    Row t uses day-t lag-1 regressors, the lag 1-4 weekly average, the lag
    5-21 monthly average, and a target built strictly from days t+1..t+h.
    """
    spec = get_spec(spec)
    if target not in TARGET_CONVENTIONS:
        raise UsageError(f"target convention must be one of {TARGET_CONVENTIONS}")
    if h < 1:
        raise UsageError(f"horizon must be >= 1, got {h}")
    length = len(series)
    needed = BURN_IN + h + 1
    if length < needed:
        raise DataError(
            f"{series.symbol}: series too short for spec {spec.name.value} at h={h} "
            f"(need {needed} days, have {length})"
        )

    t_idx = np.arange(BURN_IN, length - h)
    sums = {}

    def prefix(measure):
        if measure not in sums:
            sums[measure] = _prefix_sums(series.values(measure))
        return sums[measure]

    cols = [np.ones(t_idx.size)]
    for col in spec.columns:
        vals = series.values(col.measure)
        if col.transform == "lag1":
            cols.append(vals[t_idx])
        elif col.transform == "weekly_avg":
            s = prefix(col.measure)
            cols.append((s[t_idx] - s[t_idx - WEEKLY_SPAN]) / WEEKLY_SPAN)
        elif col.transform == "monthly_avg":
            s = prefix(col.measure)
            cols.append((s[t_idx - WEEKLY_SPAN] - s[t_idx - BURN_IN]) / MONTHLY_SPAN)
        elif col.transform == "neg_return_interaction":
            down = series.values("daily_return")[t_idx] < 0.0
            cols.append(vals[t_idx] * down)
        else:  # pragma: no cover - registry is closed
            raise UsageError(f"unknown transform {col.transform!r}")

    s_rv = prefix("rv")
    future_sum = s_rv[t_idx + 1 + h] - s_rv[t_idx + 1]
    if target == "single":
        y = series.values("rv")[t_idx + h]
    elif target == "sum":
        y = future_sum
    else:
        y = future_sum / h

    dates = series.dates()
    return RegressionSample(
        y=np.ascontiguousarray(y),
        X=np.ascontiguousarray(np.column_stack(cols)),
        labels=spec.labels,
        symbols=tuple(series.symbol for _ in t_idx),
        dates=tuple(dates[t] for t in t_idx),
        horizon=h,
        spec=spec.name,
        group_starts=np.array([0, t_idx.size], dtype=np.int64),
    )


def stack_samples(samples) -> RegressionSample:
    """Stack per-entity samples into one pooled sample with entity blocks."""
    samples = list(samples)
    if not samples:
        raise DataError("no samples to stack")
    first = samples[0]
    for s in samples[1:]:
        if s.labels != first.labels or s.horizon != first.horizon or s.spec != first.spec:
            raise UsageError("cannot stack samples from different specs/horizons")
    starts = np.zeros(len(samples) + 1, dtype=np.int64)
    np.cumsum([s.n_obs for s in samples], out=starts[1:])
    return RegressionSample(
        y=np.concatenate([s.y for s in samples]),
        X=np.vstack([s.X for s in samples]),
        labels=first.labels,
        symbols=tuple(sym for s in samples for sym in s.symbols),
        dates=tuple(d for s in samples for d in s.dates),
        horizon=first.horizon,
        spec=first.spec,
        group_starts=starts,
    )
