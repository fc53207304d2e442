"""Lomb normalized periodogram for unevenly sampled signals.

Used on detrended fit residuals expressed against u = ln(tc - t): the
residual samples are evenly spaced in trading days but unevenly spaced in u,
which is exactly the case the Lomb construction handles. Powers are
normalized by the sample variance; the false-alarm probability of the peak
uses the independent-frequency approximation with the finite-sample
single-frequency law.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Periodogram(NamedTuple):
    angular_freqs: np.ndarray
    power: np.ndarray
    n_samples: int
    n_independent: int


def frequency_grid(u: np.ndarray, oversampling: int = 4) -> np.ndarray:
    """Angular frequency grid from 1/span to the mean-Nyquist limit.

    Cyclic frequencies run from 1/U to 0.5*N/U (U = span of u) with 1/(U *
    oversampling) spacing, then scaled by 2*pi.
    """
    n = u.shape[0]
    span = float(np.max(u) - np.min(u))
    if span <= 0:
        raise ValueError("u values must span a positive range")
    f_min = 1.0 / span
    f_max = 0.5 * n / span
    step = 1.0 / (span * oversampling)
    count = max(int(np.floor((f_max - f_min) / step)) + 1, 1)
    return 2.0 * np.pi * (f_min + step * np.arange(count))


def periodogram(u: np.ndarray, x: np.ndarray, angular_freqs: np.ndarray | None = None,
                oversampling: int = 4) -> Periodogram:
    """Lomb normalized power of x(u) at each angular frequency.

    P(w) = [ (sum r cos w(u - tau))^2 / sum cos^2 + (sin terms) ] / (2 s^2)
    with tau the classic phase origin and s^2 the sample variance of x.
    """
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    n = u.shape[0]
    if n < 4:
        raise ValueError("need at least 4 samples")
    if angular_freqs is None:
        angular_freqs = frequency_grid(u, oversampling)
    r = x - x.mean()
    variance = float(r @ r) / (n - 1)
    if variance <= 0.0:
        raise ValueError("zero-variance signal has no periodogram")

    wu = np.outer(angular_freqs, u)  # (F, N)
    tan_num = np.sin(2.0 * wu).sum(axis=1)
    tan_den = np.cos(2.0 * wu).sum(axis=1)
    wtau = 0.5 * np.arctan2(tan_num, tan_den)
    arg = wu - wtau[:, None]
    cos_a = np.cos(arg)
    sin_a = np.sin(arg)
    c_proj = cos_a @ r
    s_proj = sin_a @ r
    c_norm = (cos_a * cos_a).sum(axis=1)
    s_norm = (sin_a * sin_a).sum(axis=1)
    power = 0.5 * (c_proj**2 / c_norm + s_proj**2 / s_norm) / variance

    # rule-of-thumb independent-frequency count for a grid scanned to the
    # Nyquist limit: about one per sample
    return Periodogram(angular_freqs, power, n, n)


def single_frequency_tail(power: float, n_samples: int) -> float:
    """Prob(P > power) at one preselected frequency under Gaussian noise.

    Finite-sample law (variance-normalized periodogram):
    (1 - 2*P/(N-1))^((N-3)/2), which tends to exp(-P) for large N.
    """
    base = 1.0 - 2.0 * power / (n_samples - 1)
    if base <= 0.0:
        return 0.0
    return float(base ** ((n_samples - 3) / 2.0))


def false_alarm_probability(peak_power: float, n_samples: int, n_independent: int) -> float:
    """Probability that pure noise puts at least one of n_independent
    frequencies above peak_power."""
    tail = single_frequency_tail(peak_power, n_samples)
    if tail >= 1.0:
        return 1.0
    # log1p form keeps precision when tail is tiny
    return float(-np.expm1(n_independent * np.log1p(-tail)))
