"""Daily realized-measure records and per-symbol measure series.

All quantities are in percent / percent-squared units: a day's realized
variance is the sum of squared percent log returns, the signed
semivariances split it by return sign, the skip-averaged bipower variation
tracks the continuous component, and the signed jump variation is the
semivariance difference.
"""

import csv
import math
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .errors import BvUndefinedError, DataError, UsageError
from .marketdata import DroppedDay

MEASURE_FIELDS = (
    "rv", "bv", "rv_pos", "rv_neg", "sjv", "sjv_pos", "sjv_neg", "daily_return",
)

CSV_HEADER = (
    "symbol", "date", "n_obs",
    "rv", "bv", "rv_pos", "rv_neg", "sjv", "sjv_pos", "sjv_neg", "daily_return",
)


@dataclass(frozen=True)
class DailyMeasures:
    """One day's full estimator record."""

    date: date | None
    rv: float
    bv: float
    rv_pos: float
    rv_neg: float
    sjv: float
    sjv_pos: float
    sjv_neg: float
    daily_return: float
    n_obs: int


@dataclass(frozen=True)
class MeasureSeries:
    """Date-ordered daily measures for one symbol.

    Calendar gaps are permitted; every lag structure downstream is
    positional over the retained days.
    """

    symbol: str
    asset_class: str | None
    days: tuple

    def __post_init__(self):
        if not self.days:
            raise DataError(f"measure series {self.symbol!r} is empty")
        dates = [d.date for d in self.days]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise DataError(f"measure series {self.symbol!r} dates are not strictly increasing")

    def __len__(self) -> int:
        return len(self.days)

    def dates(self) -> list[date]:
        return [d.date for d in self.days]

    def values(self, measure: str) -> np.ndarray:
        if measure not in MEASURE_FIELDS:
            raise UsageError(f"unknown measure {measure!r}; valid: {', '.join(MEASURE_FIELDS)}")
        return np.array([getattr(d, measure) for d in self.days], dtype=np.float64)


def _measures_from_arrays(day, n_obs, rv, bv, rv_pos, rv_neg, daily_ret) -> DailyMeasures:
    sjv = rv_pos - rv_neg
    return DailyMeasures(
        date=day,
        rv=float(rv),
        bv=float(bv),
        rv_pos=float(rv_pos),
        rv_neg=float(rv_neg),
        sjv=float(sjv),
        sjv_pos=float(max(sjv, 0.0)),
        sjv_neg=float(min(sjv, 0.0)),
        daily_return=float(daily_ret),
        n_obs=int(n_obs),
    )


def daily_measures(
    returns, bv_skips: int = 4, bv_scaling: bool = True, day: date | None = None
) -> DailyMeasures:
    """Compute the full measure record from one day's percent returns.

    The bipower variation averages the skip-0..skip-``bv_skips`` variants,
    each rescaled by n/(n-q-1) unless ``bv_scaling`` is off; skips that do
    not fit in the day are dropped from the average.
    """
    if bv_skips < 0:
        raise UsageError(f"bv_skips must be >= 0, got {bv_skips}")
    r = np.ascontiguousarray(returns, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise DataError("returns must be a nonempty 1-d vector")
    if not np.all(np.isfinite(r)):
        raise DataError("returns contain non-finite values")
    if r.size < 2:
        raise BvUndefinedError("bipower variation needs at least 2 returns")
    offsets = np.array([0, r.size], dtype=np.int64)
    rv, bv, rv_pos, rv_neg, dret, _ = kernels.batch_day_measures(r, offsets, bv_skips, bv_scaling)
    return _measures_from_arrays(day, r.size, rv[0], bv[0], rv_pos[0], rv_neg[0], dret[0])


def build_series(
    symbol: str,
    asset_class: str | None,
    day_returns,
    bv_skips: int = 4,
    bv_scaling: bool = True,
) -> tuple[MeasureSeries, list[DroppedDay]]:
    """Assemble a date-ordered MeasureSeries from per-day return vectors.

    ``day_returns`` maps dates to return vectors (a mapping or an iterable
    of pairs, any order).  Days whose bipower variation is undefined
    (fewer than 2 returns) are excluded and reported, not fatal.
    """
    items = list(day_returns.items()) if isinstance(day_returns, Mapping) else list(day_returns)
    if not items:
        raise DataError(f"no days supplied for {symbol!r}")
    items.sort(key=lambda kv: kv[0])
    for (d1, _), (d2, _) in zip(items, items[1:]):
        if d1 == d2:
            raise DataError(f"duplicate date {d1} for {symbol!r}")

    arrays = [np.ascontiguousarray(r, dtype=np.float64) for _, r in items]
    if any(a.ndim != 1 or a.size == 0 for a in arrays):
        raise DataError(f"{symbol!r}: every day needs a nonempty return vector")
    flat = np.concatenate(arrays)
    if not np.all(np.isfinite(flat)):
        raise DataError(f"{symbol!r}: returns contain non-finite values")
    offsets = np.zeros(len(arrays) + 1, dtype=np.int64)
    np.cumsum([a.size for a in arrays], out=offsets[1:])

    rv, bv, rv_pos, rv_neg, dret, bv_ok = kernels.batch_day_measures(
        flat, offsets, int(bv_skips), bool(bv_scaling)
    )

    kept, excluded = [], []
    for i, (day, _) in enumerate(items):
        if not bv_ok[i]:
            excluded.append(DroppedDay(symbol, day, "bv_undefined", int(arrays[i].size), 2))
            continue
        kept.append(
            _measures_from_arrays(day, arrays[i].size, rv[i], bv[i], rv_pos[i], rv_neg[i], dret[i])
        )
    if not kept:
        raise DataError(f"{symbol!r}: no day with a defined bipower variation")
    return MeasureSeries(symbol, asset_class, tuple(kept)), excluded


# ---------------------------------------------------------------------------
# Pooled descriptive statistics and correlations (Table-1/2 style reports).
# ---------------------------------------------------------------------------

QUANTILES = (0.05, 0.25, 0.50, 0.75, 0.95)


@dataclass(frozen=True)
class StatsRow:
    asset_class: str
    measure: str
    n_obs: int
    mean: float
    std: float
    q05: float
    q25: float
    q50: float
    q75: float
    q95: float


@dataclass(frozen=True)
class CorrMatrix:
    asset_class: str
    measures: tuple
    values: np.ndarray  # symmetric, unit diagonal, NaN where undefined


def _pooled(panel, measure):
    by_class = {}
    for series in panel:
        cls = series.asset_class or "unknown"
        by_class.setdefault(cls, []).append(series.values(measure))
    return {cls: np.concatenate(chunks) for cls, chunks in sorted(by_class.items())}


def descriptive_stats(panel, measures=MEASURE_FIELDS, ddof: int = 0) -> list[StatsRow]:
    """Pooled mean/std/quantiles per (asset class, measure).

    Std uses the population denominator by default (``ddof=0``); pass
    ``ddof=1`` for the sample convention.  Quantiles interpolate linearly
    between order statistics.
    """
    panel = list(panel)
    if not panel:
        raise DataError("empty panel")
    for m in measures:
        if m not in MEASURE_FIELDS:
            raise UsageError(f"unknown measure {m!r}; valid: {', '.join(MEASURE_FIELDS)}")
    rows = []
    for measure in measures:
        for cls, pooled in _pooled(panel, measure).items():
            qs = np.quantile(pooled, QUANTILES)
            rows.append(
                StatsRow(
                    asset_class=cls,
                    measure=measure,
                    n_obs=int(pooled.size),
                    mean=float(pooled.mean()),
                    std=float(pooled.std(ddof=ddof)),
                    q05=float(qs[0]),
                    q25=float(qs[1]),
                    q50=float(qs[2]),
                    q75=float(qs[3]),
                    q95=float(qs[4]),
                )
            )
    return rows


def correlation_matrix(panel, measures=MEASURE_FIELDS) -> list[CorrMatrix]:
    """Pearson correlations over pooled entity-days, one matrix per class.

    Zero-variance measures yield NaN off-diagonal entries instead of
    raising; the diagonal stays 1.
    """
    panel = list(panel)
    if not panel:
        raise DataError("empty panel")
    measures = tuple(measures)
    pooled_by_measure = [_pooled(panel, m) for m in measures]
    classes = sorted(pooled_by_measure[0])
    out = []
    for cls in classes:
        data = np.column_stack([pm[cls] for pm in pooled_by_measure])
        n = data.shape[0]
        if n < 2:
            raise DataError(f"need at least 2 pooled observations, got {n}")
        centered = data - data.mean(axis=0)
        cov = centered.T @ centered / n
        sd = np.sqrt(np.diag(cov))
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = cov / np.outer(sd, sd)
        corr[sd == 0.0, :] = np.nan
        corr[:, sd == 0.0] = np.nan
        np.fill_diagonal(corr, 1.0)
        out.append(CorrMatrix(cls, measures, corr))
    return out


# ---------------------------------------------------------------------------
# Round-trippable measures CSV.
# ---------------------------------------------------------------------------


def write_measures_csv(panel: Iterable[MeasureSeries], path) -> None:
    """Write the estimator output CSV at full round-trippable precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for series in panel:
            for d in series.days:
                writer.writerow(
                    [
                        series.symbol,
                        d.date.isoformat(),
                        d.n_obs,
                        repr(d.rv), repr(d.bv),
                        repr(d.rv_pos), repr(d.rv_neg),
                        repr(d.sjv), repr(d.sjv_pos), repr(d.sjv_neg),
                        repr(d.daily_return),
                    ]
                )


def read_measures_csv(path, asset_class: str | None = None) -> list[MeasureSeries]:
    """Read an estimator CSV back into per-symbol series (file order)."""
    grouped: dict[str, list[DailyMeasures]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"empty measures file {path}")
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataError(f"unexpected measures header {header!r} in {path}")
        for line, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                vals = [float(x) for x in rec[3:]]
                day = DailyMeasures(
                    date=date.fromisoformat(rec[1]),
                    rv=vals[0], bv=vals[1], rv_pos=vals[2], rv_neg=vals[3],
                    sjv=vals[4], sjv_pos=vals[5], sjv_neg=vals[6],
                    daily_return=vals[7], n_obs=int(rec[2]),
                )
            except (ValueError, IndexError):
                raise DataError(f"malformed measures row (line {line}) in {path}") from None
            if not all(math.isfinite(v) for v in vals):
                raise DataError(f"non-finite measure (line {line}) in {path}")
            grouped.setdefault(rec[0], []).append(day)
    if not grouped:
        raise DataError(f"measures file {path} has no data rows")
    return [
        MeasureSeries(symbol, asset_class, tuple(days)) for symbol, days in grouped.items()
    ]
