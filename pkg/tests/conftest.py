import datetime as dt

import numpy as np
import pytest

from lpplscan import synth
from lpplscan.timeseries import PriceSeries


@pytest.fixture
def weekday_series():
    """300 weekdays of a smooth exponential trend starting on a Monday."""
    n = 300
    log_prices = 7.0 + 0.0005 * np.arange(n)
    start = dt.date(2019, 1, 7)
    spec = synth.SynthSpec(
        params=synth.paper_like_params(tc=n + 50.0), n_days=n, start_date=start
    )
    base = synth.generate(spec)
    return PriceSeries(base.dates, np.exp(log_prices), log_prices)


@pytest.fixture
def bubble_params():
    return synth.paper_like_params(tc=270.0)


@pytest.fixture
def bubble_series(bubble_params):
    """Noiseless 260-day bubble with tc ten days past the end."""
    return synth.generate(synth.SynthSpec(params=bubble_params, n_days=260))


def write_price_csv(path, dates, closes, column="Close", extra_rows=()):
    lines = [f"Date,{column}"]
    for date, close in zip(dates, closes):
        lines.append(f"{date.isoformat()},{close}")
    lines.extend(extra_rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
