"""Ingestion of 5-minute price files into per-day intraday return vectors.

Prices are snapped to a UTC-anchored minute grid (a price is used for a
slot only when its timestamp equals the slot exactly; gaps are never
interpolated, the next return simply spans them).  Equity series keep only
slots inside the New York session [09:30, 16:00), so a 5-minute grid
yields 78 slots and 77 returns per full day; crypto uses the whole UTC day
(288 slots, 287 returns).  Days below the coverage threshold are dropped
and reported, never padded.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timezone
from typing import Iterable, NamedTuple
from zoneinfo import ZoneInfo

import numpy as np

from .errors import DataError, InputFormatError, UsageError

logger = logging.getLogger(__name__)

ASSET_CLASSES = ("crypto", "equity")

_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()
_NY = ZoneInfo("America/New_York")
_SESSION_OPEN = time(9, 30)
_SESSION_CLOSE = time(16, 0)
_SESSION_MINUTES = 390
REPORT_HEADER = ("symbol", "date", "reason", "observed_count", "required_count")


class PricePoint(NamedTuple):
    timestamp: int  # UTC epoch seconds
    price: float


@dataclass(frozen=True)
class PriceSeries:
    """One symbol's time-ordered price observations."""

    symbol: str
    asset_class: str
    timestamps: np.ndarray  # int64 epoch seconds, strictly increasing
    prices: np.ndarray  # float64, strictly positive

    def __post_init__(self):
        if self.asset_class not in ASSET_CLASSES:
            raise UsageError(f"unknown asset class {self.asset_class!r}")
        ts = np.asarray(self.timestamps, dtype=np.int64)
        px = np.asarray(self.prices, dtype=np.float64)
        if ts.shape != px.shape or ts.ndim != 1:
            raise DataError("timestamps and prices must be aligned 1-d arrays")
        if ts.size == 0:
            raise DataError(f"price series {self.symbol!r} is empty")
        if ts.size > 1 and not np.all(np.diff(ts) > 0):
            raise DataError(f"timestamps of {self.symbol!r} are not strictly increasing")
        if not np.all(px > 0.0):
            raise DataError(f"series {self.symbol!r} contains non-positive prices")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)

    def __len__(self) -> int:
        return int(self.timestamps.size)

    @property
    def points(self) -> list[PricePoint]:
        return [PricePoint(int(t), float(p)) for t, p in zip(self.timestamps, self.prices)]


@dataclass(frozen=True)
class DroppedDay:
    symbol: str
    date: date
    reason: str
    observed_count: int
    required_count: int


@dataclass
class IntradayReturns:
    """Per-day percent log-return vectors for one symbol."""

    symbol: str
    asset_class: str
    days: dict  # date -> np.ndarray of percent returns, insertion-ordered by date
    expected_obs: int
    dropped: list = field(default_factory=list)

    def dates(self) -> list[date]:
        return list(self.days.keys())


def _parse_timestamp(raw: str, line: int) -> int:
    text = raw.strip()
    if not text:
        raise InputFormatError("empty timestamp", line)
    try:
        return int(text)
    except ValueError:
        pass
    iso = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
    try:
        dt = datetime.fromisoformat(iso)
    except ValueError:
        raise InputFormatError(f"unparseable timestamp {raw!r}", line) from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _parse_rows(path) -> list[tuple[int, str, float]]:
    """Read a `timestamp,symbol,price` CSV into (ts, symbol, price) rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"empty input file {path}") from None
        names = [h.strip().lower() for h in header]
        try:
            i_ts = names.index("timestamp")
            i_sym = names.index("symbol")
            i_px = names.index("price")
        except ValueError:
            raise InputFormatError(
                f"header must contain timestamp,symbol,price columns, got {header!r}", line=1
            ) from None
        rows = []
        for line, rec in enumerate(reader, start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) < len(names):
                raise InputFormatError(f"expected {len(names)} fields, got {len(rec)}", line)
            try:
                price = float(rec[i_px])
            except ValueError:
                raise InputFormatError(f"unparseable price {rec[i_px]!r}", line) from None
            if not math.isfinite(price) or price <= 0.0:
                raise DataError(f"non-positive price {rec[i_px]!r} (line {line})")
            symbol = rec[i_sym].strip()
            if not symbol or any(c in symbol for c in "/\\\0"):
                raise InputFormatError(f"invalid symbol {rec[i_sym]!r}", line)
            rows.append((_parse_timestamp(rec[i_ts], line), symbol, price))
    if not rows:
        raise DataError(f"input file {path} has no data rows")
    return rows


def _series_from_rows(symbol, asset_class, rows) -> tuple[PriceSeries, int]:
    last = {}
    for ts, _, price in rows:  # file order, so later rows win
        last[ts] = price
    n_dup = len(rows) - len(last)
    ts = np.array(sorted(last), dtype=np.int64)
    px = np.array([last[t] for t in ts], dtype=np.float64)
    return PriceSeries(symbol, asset_class, ts, px), n_dup


def load_price_csv(path, asset_class: str) -> PriceSeries:
    """Parse a single-symbol price CSV into a sorted, de-duplicated series.

    Duplicate timestamps keep the last occurrence in file order; the
    number collapsed is logged as a warning.
    """
    if asset_class not in ASSET_CLASSES:
        raise UsageError(f"asset class must be one of {ASSET_CLASSES}, got {asset_class!r}")
    rows = _parse_rows(path)
    symbols = {sym for _, sym, _ in rows}
    if len(symbols) != 1:
        raise DataError(
            f"{path} contains {len(symbols)} symbols {sorted(symbols)}; expected exactly one"
        )
    series, n_dup = _series_from_rows(symbols.pop(), asset_class, rows)
    if n_dup:
        logger.warning("%s: %d duplicate timestamp(s) collapsed (kept last)", series.symbol, n_dup)
    return series


def load_universe_csv(path, asset_class: str) -> list[PriceSeries]:
    """Parse a possibly multi-symbol price CSV into one series per symbol."""
    if asset_class not in ASSET_CLASSES:
        raise UsageError(f"asset class must be one of {ASSET_CLASSES}, got {asset_class!r}")
    rows = _parse_rows(path)
    by_symbol = {}
    for row in rows:
        by_symbol.setdefault(row[1], []).append(row)
    out = []
    for symbol in sorted(by_symbol):
        series, n_dup = _series_from_rows(symbol, asset_class, by_symbol[symbol])
        if n_dup:
            logger.warning("%s: %d duplicate timestamp(s) collapsed (kept last)", symbol, n_dup)
        out.append(series)
    return out


def _utc_date(ts: int) -> date:
    return date.fromordinal(_EPOCH_ORDINAL + ts // 86400)


def expected_obs_per_day(asset_class: str, grid_minutes: int) -> int:
    if asset_class == "crypto":
        return 1440 // grid_minutes - 1
    return _SESSION_MINUTES // grid_minutes - 1


def to_intraday_returns(
    series: PriceSeries, grid_minutes: int = 5, min_coverage: float = 0.8
) -> IntradayReturns:
    """Snap prices to the grid and build per-day percent log-return vectors.

    A day is retained only when its return count reaches
    ``min_coverage * expected_obs``; dropped days are recorded on the
    result's ``dropped`` list (half days and holidays fall out here).
    """
    if grid_minutes <= 0 or 1440 % grid_minutes != 0:
        raise UsageError(f"grid_minutes must divide 1440, got {grid_minutes}")
    if not 0.0 < min_coverage <= 1.0:
        raise UsageError(f"min_coverage must be in (0, 1], got {min_coverage}")

    step = grid_minutes * 60
    on_grid = series.timestamps % step == 0
    ts = series.timestamps[on_grid]
    px = series.prices[on_grid]

    day_keys: list[date] = []
    keep = np.ones(ts.size, dtype=bool)
    if series.asset_class == "crypto":
        for t in ts:
            day_keys.append(_utc_date(int(t)))
    else:
        for i, t in enumerate(ts):
            local = datetime.fromtimestamp(int(t), tz=_NY)
            if _SESSION_OPEN <= local.time() < _SESSION_CLOSE:
                day_keys.append(local.date())
            else:
                keep[i] = False
        ts, px = ts[keep], px[keep]

    expected = expected_obs_per_day(series.asset_class, grid_minutes)
    required = math.ceil(min_coverage * expected)
    log_px = np.log(px)

    days: dict[date, np.ndarray] = {}
    dropped: list[DroppedDay] = []
    i = 0
    n = ts.size
    while i < n:
        day = day_keys[i]
        j = i
        while j < n and day_keys[j] == day:
            j += 1
        returns = 100.0 * np.diff(log_px[i:j])
        if returns.size >= min_coverage * expected:
            days[day] = returns
        else:
            dropped.append(
                DroppedDay(series.symbol, day, "insufficient_coverage", int(returns.size), required)
            )
        i = j

    if not days:
        raise DataError(
            f"{series.symbol}: no day met the coverage threshold "
            f"({required} of {expected} expected returns)"
        )
    return IntradayReturns(series.symbol, series.asset_class, days, expected, dropped)


def write_dropped_report(dropped: Iterable[DroppedDay], path) -> None:
    """Write the dropped-days report CSV (`symbol,date,reason,...`)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for d in dropped:
            writer.writerow([d.symbol, d.date.isoformat(), d.reason, d.observed_count, d.required_count])


def write_price_csv(series: PriceSeries, path) -> None:
    """Write a series back out in the ingestion CSV format (ISO timestamps)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("timestamp", "symbol", "price"))
        for t, p in zip(series.timestamps, series.prices):
            iso = datetime.fromtimestamp(int(t), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
            writer.writerow((iso, series.symbol, repr(float(p))))
