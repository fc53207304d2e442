"""Sliding-window confidence indicators over a range of endpoint dates.

For each endpoint ("pseudo-present") trading day, a family of windows ending
there is calibrated — lengths shrinking from max_window to min_window in
window_step decrements — and each fit runs through the qualification battery.
The positive (negative) confidence indicator is the fraction of windows whose
qualified fit signals a positive (negative) bubble. Only data at or before
the endpoint are ever read, so the indicator is causal.

Per-window optimizer seeds are a fixed mix of (base seed, endpoint index,
window length): results are identical however the work is scheduled, serial
or parallel.
"""

from __future__ import annotations

import datetime as dt
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import Window
from .optimizer import OptimizerConfig, SearchBox, calibrate
from .qualify import FilterConfig, qualify
from .timeseries import DataError, PriceSeries, date_to_index, position_to_date

_SEED_MASK = 2**64 - 1


class EndpointTooEarlyError(DataError):
    """The endpoint has less history than even the minimum window."""


@dataclass(frozen=True)
class ScanConfig:
    """Window scheme, endpoint range, and nested optimizer/filter settings."""

    max_window: int = 650
    min_window: int = 30
    window_step: int = 5
    endpoint_start: dt.date | None = None
    endpoint_end: dt.date | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    filters: FilterConfig = field(default_factory=FilterConfig)

    def __post_init__(self):
        if not (self.max_window >= self.min_window >= 30):
            raise ValueError("need max_window >= min_window >= 30")
        if self.window_step < 1:
            raise ValueError("window_step must be >= 1")

    @property
    def windows_per_endpoint(self) -> int:
        """Nominal window count for a full-history endpoint."""
        return (self.max_window - self.min_window) // self.window_step + 1


@dataclass(frozen=True)
class ConfidencePoint:
    """Indicator values and window tallies at one endpoint date."""

    endpoint_date: dt.date
    endpoint_index: int
    positive_ci: float
    negative_ci: float
    windows_total: int
    windows_fitted: int
    qualified_positive: int
    qualified_negative: int
    short_history: bool


@dataclass(frozen=True)
class StoredFit:
    """One qualified fit as retained for post-mortem analysis."""

    endpoint_date: dt.date
    endpoint_index: int
    t1: int
    t1_date: dt.date
    t2: int
    t2_date: dt.date
    tc: float
    tc_date: dt.date
    m: float
    omega: float
    A: float
    B: float
    C1: float
    C2: float
    cost: float
    bubble_sign: str
    filters: dict
    seed: int


def window_seed(base_seed: int, endpoint_index: int, length: int) -> int:
    """Deterministic per-window seed, independent of scheduling order."""
    ss = np.random.SeedSequence((base_seed & _SEED_MASK, endpoint_index, length))
    return int(ss.generate_state(1, np.uint64)[0])


def enumerate_windows(endpoint_index: int, cfg: ScanConfig) -> list[Window]:
    """Windows ending at the endpoint, lengths descending max..min by step.

    Windows that would start before the series beginning are dropped; if even
    the minimum window does not fit, EndpointTooEarlyError is raised.
    """
    if endpoint_index < cfg.min_window:
        raise EndpointTooEarlyError(
            f"endpoint index {endpoint_index} has under {cfg.min_window} days of history"
        )
    windows = []
    for length in range(cfg.max_window, cfg.min_window - 1, -cfg.window_step):
        t1 = endpoint_index - length
        if t1 >= 0:
            windows.append(Window(t1=t1, t2=endpoint_index))
    return windows


def endpoint_scan(
    series: PriceSeries, endpoint_index: int, cfg: ScanConfig
) -> tuple[ConfidencePoint, list[StoredFit]]:
    """Calibrate and qualify every window at one endpoint; failed fits count
    as unqualified, never as process failures."""
    windows = enumerate_windows(endpoint_index, cfg)
    total = len(windows)
    fitted = 0
    positive = 0
    negative = 0
    kept: list[StoredFit] = []
    for w in windows:
        seed = window_seed(cfg.optimizer.seed, endpoint_index, w.length)
        fit = calibrate(series, w, SearchBox.for_window(w), cfg.optimizer.with_seed(seed))
        if not fit.success:
            continue
        fitted += 1
        report = qualify(fit, series, cfg.filters)
        if not report.passed:
            continue
        if report.bubble_sign == "positive":
            positive += 1
        else:
            negative += 1
        p = fit.params
        kept.append(StoredFit(
            endpoint_date=series.dates[endpoint_index],
            endpoint_index=endpoint_index,
            t1=w.t1, t1_date=series.dates[w.t1],
            t2=w.t2, t2_date=series.dates[w.t2],
            tc=p.tc, tc_date=position_to_date(series, p.tc),
            m=p.m, omega=p.omega, A=p.A, B=p.B, C1=p.C1, C2=p.C2,
            cost=fit.cost, bubble_sign=report.bubble_sign,
            filters={k: bool(v) for k, v in report.conditions().items()},
            seed=seed,
        ))
    point = ConfidencePoint(
        endpoint_date=series.dates[endpoint_index],
        endpoint_index=endpoint_index,
        positive_ci=positive / total,
        negative_ci=negative / total,
        windows_total=total,
        windows_fitted=fitted,
        qualified_positive=positive,
        qualified_negative=negative,
        short_history=total < cfg.windows_per_endpoint,
    )
    return point, kept


def confidence_at(series: PriceSeries, endpoint: dt.date, cfg: ScanConfig) -> ConfidencePoint:
    """Confidence indicator at a single endpoint trading date."""
    return endpoint_scan(series, date_to_index(series, endpoint), cfg)[0]


@dataclass(frozen=True)
class ScanResult:
    points: list[ConfidencePoint]
    fits: list[StoredFit]


def endpoint_indices(series: PriceSeries, cfg: ScanConfig) -> list[int]:
    """Trading-day indices of the configured endpoint range (may be empty)."""
    start_date = cfg.endpoint_start or series.first_date
    end_date = cfg.endpoint_end or series.last_date
    if (start_date > end_date or start_date > series.last_date
            or end_date < series.first_date):
        return []
    first = date_to_index(series, max(start_date, series.first_date), nearest_following=True)
    last = len(series) - 1
    while series.dates[last] > end_date:
        last -= 1
    first = max(first, cfg.min_window)
    return list(range(first, last + 1))


_WORKER_STATE: dict = {}


def _worker_init(series: PriceSeries, cfg: ScanConfig) -> None:
    _WORKER_STATE["series"] = series
    _WORKER_STATE["cfg"] = cfg


def _worker_run(endpoint_index: int):
    return endpoint_scan(_WORKER_STATE["series"], endpoint_index, _WORKER_STATE["cfg"])


def scan(series: PriceSeries, cfg: ScanConfig, workers: int | None = None) -> ScanResult:
    """Confidence indicators for every trading day in the endpoint range.

    Endpoints are independent, so they are farmed out to a process pool;
    results are merged in endpoint order and are identical for any worker
    count. Qualified fits are retained for post-mortem analysis.
    """
    indices = endpoint_indices(series, cfg)
    if not indices:
        return ScanResult(points=[], fits=[])
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(indices) == 1:
        results = [endpoint_scan(series, i, cfg) for i in indices]
    else:
        with ProcessPoolExecutor(
            max_workers=min(workers, len(indices)),
            initializer=_worker_init, initargs=(series, cfg),
        ) as pool:
            results = list(pool.map(_worker_run, indices))
    points = [point for point, _ in results]
    fits = [f for _, kept in results for f in kept]
    return ScanResult(points=points, fits=fits)
