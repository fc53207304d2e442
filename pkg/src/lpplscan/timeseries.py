"""Daily price series: CSV ingestion, trading-day indexing, crash statistics.

All downstream computations are carried out in trading-day units: the i-th
retained row of the input file sits at integer position i, regardless of
calendar gaps (weekends, holidays). Critical times estimated by the model are
real-valued positions in the same unit and may fall beyond the last
observation, so this module also provides the fractional-position-to-date
mapping used for reporting.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

DATE_COLUMN = "Date"
PRICE_COLUMN_PREFERENCE = ("Adj Close", "Close")


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


@dataclass(frozen=True)
class PriceSeries:
    """Immutable daily closing-price series on a dense trading-day index.

    Attributes:
        dates: strictly increasing calendar dates, one per trading day.
        closes: strictly positive closing prices, aligned with ``dates``.
        log_closes: natural log of ``closes``.
    """

    dates: tuple[dt.date, ...]
    closes: np.ndarray
    log_closes: np.ndarray = field(repr=False)

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        logs = np.asarray(self.log_closes, dtype=float)
        if len(self.dates) != closes.shape[0] or closes.shape != logs.shape:
            raise DataError("dates, closes and log_closes must have equal length")
        if closes.shape[0] == 0:
            raise DataError("empty series")
        if np.any(closes <= 0.0):
            raise DataError("non-positive price")
        for a, b in zip(self.dates, self.dates[1:]):
            if b <= a:
                raise DataError(f"dates not strictly increasing at {b}")
        closes.flags.writeable = False
        logs.flags.writeable = False
        object.__setattr__(self, "closes", closes)
        object.__setattr__(self, "log_closes", logs)

    @classmethod
    def from_closes(cls, dates, closes) -> "PriceSeries":
        closes = np.asarray(closes, dtype=float)
        if np.any(closes <= 0.0):
            raise DataError("non-positive price")
        return cls(tuple(dates), closes, np.log(closes))

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def first_date(self) -> dt.date:
        return self.dates[0]

    @property
    def last_date(self) -> dt.date:
        return self.dates[-1]


@dataclass(frozen=True)
class CrashStats:
    """Peak/valley summary of a drawdown inside a date window."""

    peak_date: dt.date
    peak_price: float
    valley_date: dt.date
    valley_price: float
    crash_size: float

    def __post_init__(self):
        if self.valley_date <= self.peak_date:
            raise ValueError("valley must come strictly after the peak")


def _parse_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise DataError(f"unparseable date {text!r} (expected YYYY-MM-DD)") from exc


def load_csv(path, column: str | None = None, on_bad_rows: str = "strict") -> PriceSeries:
    """Load a daily price CSV into a :class:`PriceSeries`.

    The file must have a header row with a ``Date`` column (ISO-8601 dates)
    and at least one price column. When ``column`` is None the first match in
    ``("Adj Close", "Close")`` is used.

    Args:
        path: CSV file path.
        column: price column name, or None for the default preference order.
        on_bad_rows: ``"strict"`` aborts on any missing, unparseable or
            non-positive price; ``"skip"`` silently drops such rows.

    Raises:
        DataError: missing file/column, malformed rows under strict policy,
            non-monotone dates, or an empty series after filtering.
    """
    if on_bad_rows not in ("strict", "skip"):
        raise ValueError(f"unknown row policy {on_bad_rows!r}")
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc

    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames
        if not header or DATE_COLUMN not in header:
            raise DataError(f"{path}: header must contain a {DATE_COLUMN!r} column")
        if column is None:
            for candidate in PRICE_COLUMN_PREFERENCE:
                if candidate in header:
                    column = candidate
                    break
            else:
                raise DataError(
                    f"{path}: no price column among {PRICE_COLUMN_PREFERENCE}"
                )
        elif column not in header:
            raise DataError(f"{path}: no column named {column!r}")

        dates: list[dt.date] = []
        closes: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            raw = (row.get(column) or "").strip()
            try:
                if not raw or raw.lower() in ("null", "nan", "na"):
                    raise DataError(f"{path}:{lineno}: missing price")
                price = float(raw)
                if not math.isfinite(price) or price <= 0.0:
                    raise DataError(f"{path}:{lineno}: non-positive price {raw!r}")
            except (ValueError, DataError) as exc:
                if on_bad_rows == "skip":
                    continue
                if isinstance(exc, DataError):
                    raise
                raise DataError(f"{path}:{lineno}: unparseable price {raw!r}") from exc
            dates.append(_parse_date(row[DATE_COLUMN]))
            closes.append(price)

    if not dates:
        raise DataError(f"{path}: empty series after filtering")
    for a, b in zip(dates, dates[1:]):
        if b <= a:
            raise DataError(f"{path}: dates not strictly increasing at {b}")
    return PriceSeries.from_closes(dates, closes)


def write_csv(series: PriceSeries, path, column: str = "Close") -> None:
    """Write a series back to the ingestible CSV schema (Date + price column)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([DATE_COLUMN, column])
        for date, close in zip(series.dates, series.closes.tolist()):
            writer.writerow([date.isoformat(), repr(close)])


def date_to_index(series: PriceSeries, d: dt.date, nearest_following: bool = False) -> int:
    """Map a calendar date to its trading-day position.

    Exact mode requires ``d`` to be a trading date of the series. With
    ``nearest_following=True`` the first position with date >= d is returned,
    which lets callers pass weekends or holidays.
    """
    dates = series.dates
    if d > dates[-1]:
        raise DataError(f"{d} is beyond the series range (last {dates[-1]})")
    lo, hi = 0, len(dates)
    while lo < hi:
        mid = (lo + hi) // 2
        if dates[mid] < d:
            lo = mid + 1
        else:
            hi = mid
    if dates[lo] == d:
        return lo
    if nearest_following:
        return lo
    raise DataError(f"{d} is not a trading date of the series")


def _add_weekdays(start: dt.date, n: int) -> dt.date:
    """Step n weekdays forward from start (Sat/Sun skipped, holidays ignored)."""
    current = start
    remaining = n
    while remaining > 0:
        current += dt.timedelta(days=1)
        if current.weekday() < 5:
            remaining -= 1
    return current


def index_to_fractional_date(series: PriceSeries, x: float) -> tuple[dt.date, float]:
    """Map a real trading-day position to (calendar date, fractional remainder).

    Integer in-range positions return their exact date with fraction 0.
    Positions past the last observation extrapolate on a pure weekday
    calendar (5 trading days = 7 calendar days; holidays ignored).
    """
    if x < 0:
        raise ValueError("position must be >= 0")
    i = int(math.floor(x))
    frac = x - i
    n = len(series)
    if i < n:
        return series.dates[i], frac
    return _add_weekdays(series.dates[-1], i - (n - 1)), frac


def position_to_date(series: PriceSeries, x: float) -> dt.date:
    """Round a real trading-day position to the nearest trading date."""
    return index_to_fractional_date(series, math.floor(x + 0.5))[0]


def slice_indices(
    series: PriceSeries, window_start: dt.date, window_end: dt.date
) -> tuple[int, int]:
    """Inclusive index bounds of the trading days falling in [start, end]."""
    if window_end < window_start:
        raise DataError("window end precedes window start")
    if window_start > series.last_date or window_end < series.first_date:
        raise DataError("window does not intersect the series")
    start = date_to_index(series, max(window_start, series.first_date), nearest_following=True)
    end = len(series) - 1
    # walk back to the last date <= window_end
    while series.dates[end] > window_end:
        end -= 1
    return start, end


def crash_stats(series: PriceSeries, window_start: dt.date, window_end: dt.date) -> CrashStats:
    """Peak, post-peak valley and fractional crash size inside a date window.

    The peak is the maximum close in the window; the valley is the minimum
    close strictly after the peak date. A window that keeps rising after its
    maximum has no valley and raises :class:`DataError`.
    """
    start, end = slice_indices(series, window_start, window_end)
    if end - start + 1 < 2:
        raise DataError("window contains fewer than 2 trading days")
    closes = series.closes[start : end + 1]
    peak_off = int(np.argmax(closes))
    if peak_off == len(closes) - 1:
        raise DataError("no post-peak valley: window rises into its last day")
    after = closes[peak_off + 1 :]
    valley_off = peak_off + 1 + int(np.argmin(after))
    peak = float(closes[peak_off])
    valley = float(closes[valley_off])
    return CrashStats(
        peak_date=series.dates[start + peak_off],
        peak_price=peak,
        valley_date=series.dates[start + valley_off],
        valley_price=valley,
        crash_size=(peak - valley) / peak,
    )
