"""Filter battery deciding whether a calibrated fit is a valid bubble signal.

A fit qualifies only if all of the following hold:

  * m in [0.01, 0.99], omega in [2, 25] (inclusive),
  * tc within [t2, t2 + window_length/5],
  * enough log-periodic oscillations fit in the window:
    coeff * omega * ln((tc - t1)/(tc - t2)) >= 2.5,
  * worst pointwise price error <= 20%,
  * the Lomb periodogram of the detrended residuals shows a significant peak
    consistent with the fitted omega,
  * the raw residuals are mean reverting (one-sided AR(1) unit-root-style
    test on delta(e_t) vs e_(t-1) without intercept).

Cheap arithmetic checks run first; the two statistical tests only run when
those pass, since a scan evaluates tens of thousands of fits. The sign of B
classifies the signal: B < 0 is a positive bubble (accelerating growth),
B > 0 a negative one (accelerating decline); B = 0 disqualifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import lomb
from .model import lppls_eval
from .optimizer import FitResult
from .timeseries import PriceSeries

# One-sided lower-tail critical values for the no-intercept unit-root test,
# keyed by smallest applicable sample size (classic Dickey-Fuller tau table).
AR1_CRITICAL_VALUES = {
    25: {0.01: -2.66, 0.05: -1.95, 0.10: -1.60},
    50: {0.01: -2.62, 0.05: -1.95, 0.10: -1.61},
    100: {0.01: -2.60, 0.05: -1.95, 0.10: -1.61},
    250: {0.01: -2.58, 0.05: -1.95, 0.10: -1.62},
    500: {0.01: -2.58, 0.05: -1.95, 0.10: -1.62},
}

CONDITION_NAMES = (
    "m_bound",
    "omega_bound",
    "tc_bound",
    "oscillation_count",
    "max_relative_error",
    "sign_defined",
    "lomb_significance",
    "ar1_residuals",
)


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds for the qualification battery (inclusive bounds)."""

    m_range: tuple[float, float] = (0.01, 0.99)
    omega_range: tuple[float, float] = (2.0, 25.0)
    tc_horizon_fraction: float = 0.2
    # The oscillation threshold is coefficient * omega * ln(...); 0.5 follows
    # the displayed condition, 1/pi the variant quoted alongside it.
    oscillation_coefficient: float = 0.5
    oscillation_min: float = 2.5
    max_rel_error: float = 0.20
    lomb_alpha: float = 0.05
    lomb_oversampling: int = 4
    # periodogram peak must land within [band[0]*omega, band[1]*omega]
    lomb_freq_band: tuple[float, float] = (0.5, 2.0)
    ar1_alpha: float = 0.05
    # residual sd at or below this is floating-point fit precision: the
    # degenerate perfect-fit rule applies instead of the statistical tests
    degenerate_residual_tol: float = 1e-7


@dataclass(frozen=True)
class LombOutcome:
    passed: bool
    degenerate: bool
    peak_power: Optional[float]
    false_alarm: Optional[float]
    peak_angular_freq: Optional[float]
    freq_consistent: Optional[bool]


@dataclass(frozen=True)
class AR1Outcome:
    passed: bool
    degenerate: bool
    slope: Optional[float]
    stat: Optional[float]
    critical_value: Optional[float]


@dataclass(frozen=True)
class QualificationReport:
    """Per-condition verdicts, diagnostics, and the overall pass flag."""

    passed: bool
    bubble_sign: str  # "positive" | "negative" | "none"
    m_bound: Optional[bool]
    omega_bound: Optional[bool]
    tc_bound: Optional[bool]
    oscillation_count: Optional[bool]
    max_relative_error: Optional[bool]
    sign_defined: Optional[bool]
    lomb_significance: Optional[bool]
    ar1_residuals: Optional[bool]
    oscillation_value: Optional[float] = None
    max_rel_error_value: Optional[float] = None
    lomb_peak_power: Optional[float] = None
    lomb_false_alarm: Optional[float] = None
    ar1_stat: Optional[float] = None

    def conditions(self) -> dict[str, Optional[bool]]:
        return {name: getattr(self, name) for name in CONDITION_NAMES}


def _failed_report() -> QualificationReport:
    return QualificationReport(
        passed=False, bubble_sign="none",
        m_bound=None, omega_bound=None, tc_bound=None, oscillation_count=None,
        max_relative_error=None, sign_defined=None, lomb_significance=None,
        ar1_residuals=None,
    )


def check_bounds(fit: FitResult, cfg: FilterConfig) -> dict[str, bool]:
    """Inclusive m/omega/tc range checks for a converged fit."""
    p = fit.params
    w = fit.window
    horizon = w.t2 + cfg.tc_horizon_fraction * w.length
    return {
        "m_bound": cfg.m_range[0] <= p.m <= cfg.m_range[1],
        "omega_bound": cfg.omega_range[0] <= p.omega <= cfg.omega_range[1],
        "tc_bound": w.t2 <= p.tc <= horizon,
    }


def oscillation_count(fit: FitResult, cfg: FilterConfig) -> tuple[float, bool]:
    """coeff * omega * ln((tc - t1)/(tc - t2)); passes at >= the threshold."""
    p = fit.params
    w = fit.window
    if not p.tc > w.t2:
        return float("nan"), False
    value = cfg.oscillation_coefficient * p.omega * math.log(
        (p.tc - w.t1) / (p.tc - w.t2)
    )
    return value, value >= cfg.oscillation_min


def max_relative_error(fit: FitResult, series: PriceSeries,
                       limit: float = 0.20) -> tuple[float, bool]:
    """Worst pointwise |p_hat - p| / p over the window; passes at <= limit."""
    w = fit.window
    t = np.arange(w.t1, w.t2 + 1, dtype=float)
    prices = series.closes[w.t1 : w.t2 + 1]
    fitted = np.exp(lppls_eval(fit.params, t))
    value = float(np.max(np.abs(fitted - prices) / prices))
    return value, value <= limit


def detrended_residuals(series: PriceSeries, fit: FitResult) -> tuple[np.ndarray, np.ndarray]:
    """(u, r): residuals with A and the pure power law removed, rescaled by
    (tc - t)^(-m), against u = ln(tc - t). What remains of a genuine signal
    is the log-periodic oscillation at the fitted omega."""
    p = fit.params
    w = fit.window
    t = np.arange(w.t1, w.t2 + 1, dtype=float)
    y = series.log_closes[w.t1 : w.t2 + 1]
    dt_ = p.tc - t
    pw = dt_**p.m
    r = (y - p.A - p.B * pw) / pw
    return np.log(dt_), r


def lomb_test(series: PriceSeries, fit: FitResult, cfg: FilterConfig) -> LombOutcome:
    """Significance of the log-periodic oscillation in the detrended residuals.

    Passes when the periodogram peak's false-alarm probability is at most
    lomb_alpha and the peak frequency is consistent with the fitted omega.
    Residuals at floating-point fit precision pass degenerately: a perfect
    fit carries its oscillation in the model itself.
    """
    u, r = detrended_residuals(series, fit)
    if float(np.std(r)) <= cfg.degenerate_residual_tol:
        return LombOutcome(True, True, None, None, None, None)
    pg = lomb.periodogram(u, r, oversampling=cfg.lomb_oversampling)
    peak = int(np.argmax(pg.power))
    peak_power = float(pg.power[peak])
    peak_freq = float(pg.angular_freqs[peak])
    fap = lomb.false_alarm_probability(peak_power, pg.n_samples, pg.n_independent)
    lo, hi = cfg.lomb_freq_band
    consistent = lo * fit.params.omega <= peak_freq <= hi * fit.params.omega
    return LombOutcome(
        passed=(fap <= cfg.lomb_alpha) and consistent,
        degenerate=False,
        peak_power=peak_power,
        false_alarm=fap,
        peak_angular_freq=peak_freq,
        freq_consistent=consistent,
    )


def _nearest_critical_value(n: int, alpha: float) -> float:
    sizes = sorted(AR1_CRITICAL_VALUES)
    chosen = sizes[0]
    for size in sizes:
        if n >= size:
            chosen = size
    table = AR1_CRITICAL_VALUES[chosen]
    if alpha not in table:
        raise ValueError(f"no critical value tabulated for alpha={alpha}")
    return table[alpha]


def ar1_test(fit: FitResult, cfg: FilterConfig) -> AR1Outcome:
    """One-sided mean-reversion test of the residuals e = ln(p_hat) - ln(p).

    Regresses delta(e_t) on e_(t-1) without intercept; passes when the slope
    is negative and its t-statistic falls below the tabulated one-sided
    critical value, i.e. the unit-root (random walk) null is rejected in
    favor of mean reversion. Constant residuals pass degenerately.
    """
    e = fit.residuals
    if e is None or e.shape[0] < 30:
        raise ValueError("need a residual vector of length >= 30")
    if float(np.std(e)) <= cfg.degenerate_residual_tol:
        return AR1Outcome(True, True, None, None, None)
    lagged = e[:-1]
    delta = np.diff(e)
    denom = float(lagged @ lagged)
    if denom <= 0.0:
        return AR1Outcome(True, True, None, None, None)
    slope = float(lagged @ delta) / denom
    resid = delta - slope * lagged
    dof = delta.shape[0] - 1
    s2 = float(resid @ resid) / dof
    if s2 <= 0.0:
        # exact AR relation: deterministically mean reverting iff slope < 0
        return AR1Outcome(slope < 0.0, True, slope, None, None)
    stat = slope / math.sqrt(s2 / denom)
    critical = _nearest_critical_value(e.shape[0], cfg.ar1_alpha)
    return AR1Outcome(
        passed=(slope < 0.0) and (stat <= critical),
        degenerate=False,
        slope=slope,
        stat=stat,
        critical_value=critical,
    )


def qualify(fit: FitResult, series: PriceSeries,
            cfg: FilterConfig | None = None) -> QualificationReport:
    """Run the full battery on a fit and attach the report to it.

    Bound and arithmetic checks are always evaluated; the Lomb and AR(1)
    tests only run when everything cheaper passed (their verdicts stay None
    otherwise). ``passed`` is the conjunction over all conditions, with None
    counting as not passed.
    """
    cfg = cfg or FilterConfig()
    if not fit.success or fit.params is None:
        report = _failed_report()
        fit.qualification = report
        return report

    bounds = check_bounds(fit, cfg)
    osc_value, osc_ok = oscillation_count(fit, cfg)
    err_value, err_ok = max_relative_error(fit, series, cfg.max_rel_error)
    b = fit.params.B
    sign = "positive" if b < 0 else ("negative" if b > 0 else "none")
    sign_ok = sign != "none"

    cheap_ok = all(bounds.values()) and osc_ok and err_ok and sign_ok
    lomb_out = ar1_out = None
    if cheap_ok:
        lomb_out = lomb_test(series, fit, cfg)
        ar1_out = ar1_test(fit, cfg)

    conditions = {
        **bounds,
        "oscillation_count": osc_ok,
        "max_relative_error": err_ok,
        "sign_defined": sign_ok,
        "lomb_significance": lomb_out.passed if lomb_out else None,
        "ar1_residuals": ar1_out.passed if ar1_out else None,
    }
    report = QualificationReport(
        passed=all(v is True for v in conditions.values()),
        bubble_sign=sign,
        oscillation_value=osc_value,
        max_rel_error_value=err_value,
        lomb_peak_power=lomb_out.peak_power if lomb_out else None,
        lomb_false_alarm=lomb_out.false_alarm if lomb_out else None,
        ar1_stat=ar1_out.stat if ar1_out else None,
        **conditions,
    )
    fit.qualification = report
    return report
