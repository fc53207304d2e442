"""Post-mortem analysis of a qualified-fit population.

After a crash (or on any cluster of bubble signals), the retained qualified
fits carry two interesting samples: the fitted critical times tc — read as a
probability measure of the crash date — and the window start times t1, which
locate the bubble's origin. This module estimates their densities by
Gaussian-kernel KDE, reports quantile ranges and skewness of tc, and maps
everything back to calendar dates.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np

from .indicator import StoredFit
from .timeseries import PriceSeries, position_to_date

GRID_POINTS = 512
BANDWIDTH_FLOOR = 1.0  # trading days; keeps degenerate spreads from delta spikes
DEFAULT_QUANTILE_LEVELS = (0.05, 0.20, 0.80, 0.95)


class EmptySelectionError(ValueError):
    """No qualified fits matched the requested sign and endpoint range."""


@dataclass(frozen=True)
class Density:
    grid: np.ndarray      # trading-day positions
    values: np.ndarray    # normalized so the trapezoid integral is 1
    bandwidth: float


@dataclass(frozen=True)
class PostMortemReport:
    n_fits: int
    tc_density: Density
    t1_density: Density
    tc_quantiles: dict[float, dt.date]
    tc_quantile_positions: dict[float, float]
    t1_range: tuple[dt.date, dt.date]
    tc_skewness: float
    tc_mode_date: dt.date


def collect_fits(
    fits: list[StoredFit],
    endpoint_start: dt.date,
    endpoint_end: dt.date,
    sign: str = "positive",
) -> list[StoredFit]:
    """Qualified fits of one sign whose endpoints fall in [start, end]."""
    if sign not in ("positive", "negative"):
        raise ValueError(f"sign must be positive or negative, got {sign!r}")
    selected = [
        f for f in fits
        if f.bubble_sign == sign and endpoint_start <= f.endpoint_date <= endpoint_end
    ]
    if not selected:
        raise EmptySelectionError(
            f"no {sign} fits with endpoints in [{endpoint_start}, {endpoint_end}]"
        )
    return selected


def silverman_bandwidth(samples: np.ndarray) -> float:
    """Normal-reference rule on the sample standard deviation, floored at one
    trading day so identical samples still yield a finite density."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    sd = float(np.std(samples, ddof=1)) if n > 1 else 0.0
    return max((4.0 / 3.0) ** 0.2 * sd * n ** (-0.2), BANDWIDTH_FLOOR)


def density_grid(samples: np.ndarray, bandwidth: float, points: int = GRID_POINTS) -> np.ndarray:
    lo = float(np.min(samples)) - 3.0 * bandwidth
    hi = float(np.max(samples)) + 3.0 * bandwidth
    return np.linspace(lo, hi, points)


def kde(
    samples,
    grid,
    bandwidth: float | None = None,
    normalize: bool = True,
) -> np.ndarray:
    """Gaussian-kernel density of the samples on the grid.

    With normalize=True (the reporting default) the raw kernel average is
    rescaled by its trapezoid integral over the grid, so the emitted density
    integrates to 1 exactly even though the grid clips the outermost tails.
    """
    samples = np.asarray(samples, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if samples.shape[0] == 0:
        raise ValueError("need at least one sample")
    h = silverman_bandwidth(samples) if bandwidth is None else float(bandwidth)
    z = (grid[:, None] - samples[None, :]) / h
    values = np.exp(-0.5 * z * z).sum(axis=1) / (samples.shape[0] * h * math.sqrt(2.0 * math.pi))
    if normalize:
        area = float(np.trapezoid(values, grid))
        if area <= 0.0:
            raise ValueError("density integrates to zero on the given grid")
        values = values / area
    return values


def quantiles(samples, levels) -> np.ndarray:
    """Empirical quantiles by linear interpolation between closest ranks."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] == 0:
        raise ValueError("need at least one sample")
    levels = np.asarray(levels, dtype=float)
    if np.any((levels < 0.0) | (levels > 1.0)):
        raise ValueError("quantile levels must lie in [0, 1]")
    return np.quantile(samples, levels, method="linear")


def skewness(samples) -> float:
    """Adjusted Fisher-Pearson standardized third moment."""
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    if n < 3:
        return 0.0
    centered = x - x.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        return 0.0
    g1 = float(np.mean(centered**3)) / m2**1.5
    return g1 * math.sqrt(n * (n - 1)) / (n - 2)


def report(
    fits: list[StoredFit],
    series: PriceSeries,
    quantile_levels=DEFAULT_QUANTILE_LEVELS,
    grid_points: int = GRID_POINTS,
) -> PostMortemReport:
    """Densities of tc and t1, tc quantile dates, t1 range, skewness, mode."""
    if not fits:
        raise EmptySelectionError("empty fit list")
    tc_samples = np.array([f.tc for f in fits])
    t1_samples = np.array([float(f.t1) for f in fits])

    tc_h = silverman_bandwidth(tc_samples)
    t1_h = silverman_bandwidth(t1_samples)
    tc_grid = density_grid(tc_samples, tc_h, grid_points)
    t1_grid = density_grid(t1_samples, t1_h, grid_points)
    tc_density = Density(tc_grid, kde(tc_samples, tc_grid, tc_h), tc_h)
    t1_density = Density(t1_grid, kde(t1_samples, t1_grid, t1_h), t1_h)

    q_positions = quantiles(tc_samples, quantile_levels)
    tc_quantile_positions = {
        float(level): float(q) for level, q in zip(quantile_levels, q_positions)
    }
    tc_quantiles = {
        level: position_to_date(series, q)
        for level, q in tc_quantile_positions.items()
    }
    mode_position = float(tc_grid[int(np.argmax(tc_density.values))])
    return PostMortemReport(
        n_fits=len(fits),
        tc_density=tc_density,
        t1_density=t1_density,
        tc_quantiles=tc_quantiles,
        tc_quantile_positions=tc_quantile_positions,
        t1_range=(
            position_to_date(series, float(t1_samples.min())),
            position_to_date(series, float(t1_samples.max())),
        ),
        tc_skewness=skewness(tc_samples),
        tc_mode_date=position_to_date(series, mode_position),
    )
