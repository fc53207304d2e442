"""LPPLS log-price model: evaluation, linear subordination, cost function.

The log-price is modeled as

    A + B*(tc-t)^m + C1*(tc-t)^m*cos(w*ln(tc-t)) + C2*(tc-t)^m*sin(w*ln(tc-t))

with t and tc in trading-day units. Given the three nonlinear parameters
(tc, m, w), the four linear ones (A, B, C1, C2) have a closed-form
least-squares optimum; this module computes it and the resulting cost so an
optimizer only has to search over (tc, m, w).

The linear optimum is obtained from the 4-column design matrix through an
orthogonal decomposition (SVD-backed lstsq) rather than by forming the 4x4
normal equations: the cos/sin columns are nearly collinear when w*ln(tc-t)
varies slowly across the window, and squaring the condition number there
costs half the available precision.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .timeseries import PriceSeries

# Below this singular-value ratio the basis is treated as degenerate: the
# recovered amplitudes would be numerical noise.
RANK_RCOND = 1e-10

# Sentinel cost for degenerate or infeasible points; keeps the optimizer total.
INFEASIBLE_COST = float("inf")


@dataclass(frozen=True)
class LpplsParams:
    """The seven model parameters, trading-day units.

    tc is the critical time (a real position, strictly after every fitted
    observation), m the power exponent, omega the log-periodic angular
    frequency; A, B, C1, C2 are the linear amplitudes.
    """

    tc: float
    m: float
    omega: float
    A: float
    B: float
    C1: float
    C2: float

    @property
    def C(self) -> float:
        return float(np.hypot(self.C1, self.C2))

    @property
    def damping(self) -> float:
        """m*|B| / (omega*C); +inf when C == 0 (nothing to damp)."""
        c = self.C
        if c == 0.0:
            return float("inf")
        return self.m * abs(self.B) / (self.omega * c)


@dataclass(frozen=True)
class Window:
    """Inclusive trading-day index range [t1, t2] of one fitting window."""

    t1: int
    t2: int

    def __post_init__(self):
        if self.t2 <= self.t1:
            raise ValueError("window end must exceed window start")
        if self.length < 29:
            raise ValueError("windows below 30 trading days are never constructed")

    @property
    def length(self) -> int:
        """Window length t2 - t1 in trading days."""
        return self.t2 - self.t1

    @property
    def n_points(self) -> int:
        return self.length + 1


class DegenerateBasisError(ValueError):
    """The design matrix is numerically rank deficient for these (tc, m, w)."""


class LinearFit(NamedTuple):
    """Subordinated linear solution at fixed (tc, m, w)."""

    A: float
    B: float
    C1: float
    C2: float
    cost: float
    ok: bool


def lppls_eval(p: LpplsParams, t):
    """Evaluate the model log-price at position(s) t < p.tc."""
    t = np.asarray(t, dtype=float)
    if np.any(t >= p.tc):
        raise ValueError(f"t must be strictly below tc={p.tc}")
    dt_ = p.tc - t
    ldt = np.log(dt_)
    pw = np.exp(p.m * ldt)
    phase = p.omega * ldt
    out = p.A + pw * (p.B + p.C1 * np.cos(phase) + p.C2 * np.sin(phase))
    return float(out) if out.ndim == 0 else out


def design_matrix(t: np.ndarray, tc: float, m: float, omega: float) -> np.ndarray:
    """4-column design [1, f, g, h] with f=(tc-t)^m, g=f*cos, h=f*sin."""
    dt_ = tc - t
    ldt = np.log(dt_)
    f = np.exp(m * ldt)
    phase = omega * ldt
    X = np.empty((t.shape[0], 4))
    X[:, 0] = 1.0
    X[:, 1] = f
    X[:, 2] = f * np.cos(phase)
    X[:, 3] = f * np.sin(phase)
    return X


def subordinate(t: np.ndarray, y: np.ndarray, tc: float, m: float, omega: float) -> LinearFit:
    """Least-squares (A, B, C1, C2) and cost at fixed (tc, m, omega).

    Returns ok=False with the sentinel cost when tc does not clear the window
    or the basis is numerically rank deficient.
    """
    if not (tc > t[-1]) or not np.isfinite(tc + m + omega):
        return LinearFit(0.0, 0.0, 0.0, 0.0, INFEASIBLE_COST, False)
    X = design_matrix(t, tc, m, omega)
    if not np.all(np.isfinite(X)):
        return LinearFit(0.0, 0.0, 0.0, 0.0, INFEASIBLE_COST, False)
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=RANK_RCOND)
    if rank < 4:
        return LinearFit(0.0, 0.0, 0.0, 0.0, INFEASIBLE_COST, False)
    r = y - X @ beta
    return LinearFit(*(float(b) for b in beta), float(r @ r), True)


def window_arrays(series: PriceSeries, w: Window) -> tuple[np.ndarray, np.ndarray]:
    """(t, log-price) arrays of one window; t are integer positions as floats."""
    if w.t1 < 0 or w.t2 >= len(series):
        raise ValueError(f"window [{w.t1}, {w.t2}] outside series of length {len(series)}")
    t = np.arange(w.t1, w.t2 + 1, dtype=float)
    y = series.log_closes[w.t1 : w.t2 + 1]
    return t, y


def solve_linear(
    series: PriceSeries, w: Window, tc: float, m: float, omega: float
) -> tuple[float, float, float, float]:
    """Unique least-squares (A, B, C1, C2) for the window at fixed (tc, m, omega).

    Raises:
        DegenerateBasisError: numerically rank-deficient basis.
        ValueError: tc does not lie strictly beyond the window end.
    """
    t, y = window_arrays(series, w)
    if not tc > w.t2:
        raise ValueError(f"tc={tc} must lie strictly beyond the window end {w.t2}")
    fit = subordinate(t, y, tc, m, omega)
    if not fit.ok:
        raise DegenerateBasisError(
            f"design matrix rank deficient at tc={tc}, m={m}, omega={omega}"
        )
    return fit.A, fit.B, fit.C1, fit.C2


def cost(series: PriceSeries, w: Window, tc: float, m: float, omega: float) -> float:
    """Sum of squared log-price residuals at the subordinated linear optimum.

    Degenerate-basis or out-of-domain inputs return the +inf sentinel rather
    than raising, so optimizers can treat them as infeasible.
    """
    t, y = window_arrays(series, w)
    return subordinate(t, y, tc, m, omega).cost


def residuals(series: PriceSeries, w: Window, p: LpplsParams) -> np.ndarray:
    """Per-point residuals ln p_hat - ln p over the window."""
    t, y = window_arrays(series, w)
    return lppls_eval(p, t) - y


def window_dates(series: PriceSeries, w: Window) -> tuple[dt.date, dt.date]:
    return series.dates[w.t1], series.dates[w.t2]
