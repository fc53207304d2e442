"""Nonlinear calibration of (tc, m, omega) by box-constrained CMA-ES.

The three nonlinear parameters are searched inside the standard box

    m in [0, 1],  omega in [1, 50],  tc in [t2, t2 + (t2 - t1)/3]

with the damping feasibility requirement m*|B|/(omega*C) >= 1 applied after
each subordinated linear solve (infeasible candidates cost +inf). Coordinates
are affinely normalized onto the unit cube before the CMA-ES sees them: tc
spans hundreds of trading days while m spans (0, 1), and unnormalized
covariance adaptation stalls on that aspect ratio.

Every run is a pure function of (inputs, seed): restart seeds derive from the
configured seed through a fixed mixing function, so results never depend on
scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import cma
from .model import (
    INFEASIBLE_COST,
    LpplsParams,
    Window,
    lppls_eval,
    subordinate,
    window_arrays,
)
from .timeseries import PriceSeries


class InfeasibleFitError(RuntimeError):
    """No candidate with finite cost was found in any restart."""


@dataclass(frozen=True)
class SearchBox:
    """Box constraints for the nonlinear search, trading-day units."""

    tc_range: tuple[float, float]
    m_range: tuple[float, float] = (0.0, 1.0)
    omega_range: tuple[float, float] = (1.0, 50.0)
    damping_min: float = 1.0

    def __post_init__(self):
        for lo, hi in (self.tc_range, self.m_range, self.omega_range):
            if not hi > lo:
                raise ValueError("search box ranges must have positive width")

    @classmethod
    def for_window(cls, w: Window, **overrides) -> "SearchBox":
        """The standard box: tc in [t2, t2 + window_length/3]."""
        return cls(tc_range=(float(w.t2), w.t2 + w.length / 3.0), **overrides)

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.tc_range[0], self.m_range[0], self.omega_range[0]])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.tc_range[1], self.m_range[1], self.omega_range[1]])


@dataclass(frozen=True)
class OptimizerConfig:
    """CMA-ES budget and seeding; defaults follow the 3-dimension rule."""

    population_size: int = 7
    max_evaluations: int = 3000
    restarts: int = 3
    seed: int = 0
    initial_step_fraction: float = 0.3
    tolerance_cost: float = 0.0

    def __post_init__(self):
        if min(self.population_size, self.max_evaluations, self.restarts) < 1:
            raise ValueError("population, evaluations and restarts must be positive")
        if not 0.0 < self.initial_step_fraction <= 1.0:
            raise ValueError("initial_step_fraction must be in (0, 1]")
        if self.tolerance_cost < 0.0:
            raise ValueError("tolerance_cost must be nonnegative")

    def with_seed(self, seed: int) -> "OptimizerConfig":
        return replace(self, seed=seed)


@dataclass
class FitResult:
    """One calibrated window: parameters, cost, residuals, qualification slot."""

    window: Window
    params: Optional[LpplsParams]
    cost: float
    residuals: Optional[np.ndarray]
    seed: int
    success: bool
    qualification: object = None  # filled by qualify.qualify

    @property
    def qualified(self) -> bool:
        return self.qualification is not None and self.qualification.passed


def restart_seed(base_seed: int, restart: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((int(base_seed) & (2**64 - 1), restart))


def cma_es_minimize(objective, box: SearchBox, cfg: OptimizerConfig):
    """Minimize objective(tc, m, omega) over the box; best point of all restarts.

    The objective may return +inf (degenerate basis, damping violation); such
    candidates are treated as infeasible. Raises InfeasibleFitError when every
    candidate of every restart is infeasible.
    """
    lower, upper = box.lower, box.upper
    width = upper - lower

    def cube_objective(z: np.ndarray) -> float:
        tc, m, omega = lower + width * z
        return objective(tc, m, omega)

    best_f = np.inf
    best_z = None
    for r in range(cfg.restarts):
        rng = np.random.default_rng(restart_seed(cfg.seed, r))
        result = cma.minimize_unit_cube(
            cube_objective,
            x0=np.full(3, 0.5),
            sigma0=cfg.initial_step_fraction,
            rng=rng,
            population_size=cfg.population_size,
            max_evaluations=cfg.max_evaluations,
            target_cost=cfg.tolerance_cost,
        )
        if result.fun < best_f:
            best_f = result.fun
            best_z = result.x
        if best_f <= cfg.tolerance_cost:
            break
    if best_z is None or not np.isfinite(best_f):
        raise InfeasibleFitError("no feasible candidate in any restart")
    tc, m, omega = lower + width * best_z
    return float(tc), float(m), float(omega), float(best_f)


def constrained_objective(t: np.ndarray, y: np.ndarray, box: SearchBox):
    """Window cost with the damping constraint folded in as a +inf sentinel."""

    damping_min = box.damping_min

    def objective(tc: float, m: float, omega: float) -> float:
        fit = subordinate(t, y, tc, m, omega)
        if not fit.ok:
            return INFEASIBLE_COST
        c = np.hypot(fit.C1, fit.C2)
        # C == 0 is a pure power law: nothing oscillates, nothing to damp.
        if c > 0.0 and m * abs(fit.B) / (omega * c) < damping_min:
            return INFEASIBLE_COST
        return fit.cost

    return objective


def calibrate(
    series: PriceSeries,
    w: Window,
    box: SearchBox | None = None,
    cfg: OptimizerConfig | None = None,
) -> FitResult:
    """Calibrate one window; optimizer infeasibility yields a failed fit.

    The returned FitResult carries the subordinated linear parameters, the
    per-point residuals ln(p_hat) - ln(p), the final cost, the seed used, and
    an empty qualification slot.
    """
    box = box or SearchBox.for_window(w)
    cfg = cfg or OptimizerConfig()
    t, y = window_arrays(series, w)
    objective = constrained_objective(t, y, box)
    try:
        tc, m, omega, best_cost = cma_es_minimize(objective, box, cfg)
    except InfeasibleFitError:
        return FitResult(
            window=w, params=None, cost=INFEASIBLE_COST, residuals=None,
            seed=cfg.seed, success=False,
        )
    linear = subordinate(t, y, tc, m, omega)
    params = LpplsParams(tc=tc, m=m, omega=omega, A=linear.A, B=linear.B,
                         C1=linear.C1, C2=linear.C2)
    res = lppls_eval(params, t) - y
    return FitResult(
        window=w, params=params, cost=best_cost, residuals=res,
        seed=cfg.seed, success=True,
    )
