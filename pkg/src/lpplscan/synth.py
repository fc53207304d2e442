"""Synthetic bubble series: the ground-truth oracle for calibration tests.

Generates prices whose log follows the model formula exactly, plus optional
i.i.d. Gaussian noise *in log-price* — additive log noise keeps the
least-squares fit correctly specified, which is what an oracle requires.
Dates walk a pure weekday calendar from the start date.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .model import LpplsParams, lppls_eval
from .timeseries import PriceSeries, _add_weekdays


def paper_like_params(
    tc: float,
    a: float = 8.0,
    b: float = -0.05,
    m: float = 0.5,
    omega: float = 9.0,
    damping: float = 1.5,
    phase: float = 0.7,
) -> LpplsParams:
    """A preset centered comfortably inside every filter bound.

    The oscillation amplitude C is derived from the requested damping value
    (m*|b|/(omega*C) = damping) and split across C1/C2 by the phase angle.
    """
    c = m * abs(b) / (omega * damping)
    return LpplsParams(
        tc=tc, m=m, omega=omega, A=a, B=b,
        C1=c * float(np.cos(phase)), C2=c * float(np.sin(phase)),
    )


@dataclass(frozen=True)
class SynthSpec:
    """Generator spec: model params, length, log-noise level, seed."""

    params: LpplsParams
    n_days: int
    noise_sigma: float = 0.0
    seed: int = 0
    start_date: dt.date = field(default=dt.date(2017, 1, 2))

    def __post_init__(self):
        if self.n_days < 2:
            raise ValueError("need at least 2 days")
        if not self.params.tc > self.n_days - 1:
            raise ValueError(
                f"tc={self.params.tc} must lie beyond the generated range "
                f"(last position {self.n_days - 1})"
            )
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")


def generate(spec: SynthSpec) -> PriceSeries:
    """Seeded series with log-price = model(t) + N(0, noise_sigma^2)."""
    t = np.arange(spec.n_days, dtype=float)
    log_prices = lppls_eval(spec.params, t)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
        log_prices = log_prices + rng.normal(0.0, spec.noise_sigma, spec.n_days)
    dates = [spec.start_date if spec.start_date.weekday() < 5
             else _add_weekdays(spec.start_date, 1)]
    for _ in range(spec.n_days - 1):
        dates.append(_add_weekdays(dates[-1], 1))
    return PriceSeries(tuple(dates), np.exp(log_prices), np.asarray(log_prices))


def geometric_random_walk(
    n_days: int,
    daily_vol: float = 0.012,
    drift: float = 0.0002,
    start_price: float = 2500.0,
    seed: int = 0,
    start_date: dt.date = dt.date(2017, 1, 2),
) -> PriceSeries:
    """Seeded geometric random walk, the no-bubble null for false-positive
    control (defaults sized like a large-cap index)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    increments = rng.normal(drift, daily_vol, n_days - 1)
    log_prices = np.concatenate(([np.log(start_price)],
                                 np.log(start_price) + np.cumsum(increments)))
    dates = [start_date if start_date.weekday() < 5 else _add_weekdays(start_date, 1)]
    for _ in range(n_days - 1):
        dates.append(_add_weekdays(dates[-1], 1))
    return PriceSeries(tuple(dates), np.exp(log_prices), log_prices)
