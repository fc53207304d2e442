"""Covariance matrix adaptation evolution strategy on the unit cube.

A compact, deterministic (mu/mu_w, lambda)-CMA-ES with the standard rank-one
and rank-mu covariance updates and cumulative step-size adaptation. The
search space is the unit cube [0, 1]^n; callers map their box onto it so the
covariance adaptation sees comparably scaled coordinates. Candidates outside
the cube are resampled a bounded number of times, then projected onto the
boundary. Objectives may return +inf for infeasible points; ranking handles
it as a worst value.

All randomness flows from the numpy Generator handed in, so identical inputs
give bitwise-identical runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RESAMPLE_CAP = 50
SIGMA_FLOOR = 1e-12
MAX_CONDITION = 1e14
TOL_FUN = 1e-12


@dataclass
class CmaResult:
    x: np.ndarray
    fun: float
    evaluations: int
    stop_reason: str


def default_population_size(n: int) -> int:
    """Hansen's dimension rule 4 + floor(3 ln n)."""
    return 4 + int(3 * np.log(n))


def minimize_unit_cube(
    objective,
    x0: np.ndarray,
    sigma0: float,
    rng: np.random.Generator,
    population_size: int | None = None,
    max_evaluations: int = 3000,
    target_cost: float = 0.0,
) -> CmaResult:
    """Minimize objective(x) for x in [0, 1]^n.

    Args:
        objective: callable on an n-vector inside the cube; may return +inf.
        x0: initial mean, inside the cube.
        sigma0: initial step size in cube units.
        rng: seeded generator; the sole source of randomness.
        population_size: candidates per generation (default: dimension rule).
        max_evaluations: evaluation budget for this run.
        target_cost: stop once the best value drops to this level.
    """
    n = x0.shape[0]
    lam = population_size or default_population_size(n)
    mu = lam // 2
    weights = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights /= weights.sum()
    mu_eff = 1.0 / np.sum(weights**2)

    cc = (4 + mu_eff / n) / (n + 4 + 2 * mu_eff / n)
    cs = (mu_eff + 2) / (n + mu_eff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mu_eff)
    cmu = min(1 - c1, 2 * (mu_eff - 2 + 1 / mu_eff) / ((n + 2) ** 2 + mu_eff))
    damps = 1 + 2 * max(0.0, np.sqrt((mu_eff - 1) / (n + 1)) - 1) + cs
    chi_n = np.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

    mean = np.array(x0, dtype=float)
    sigma = float(sigma0)
    cov = np.eye(n)
    p_sigma = np.zeros(n)
    p_cov = np.zeros(n)
    eigvals = np.ones(n)
    eigvecs = np.eye(n)

    best_x = mean.copy()
    best_f = np.inf
    evaluations = 0
    generation = 0
    stop = ""
    # generation-best history window for the stagnation stop
    hist_len = 10 + int(np.ceil(30 * n / lam))
    history: list[float] = []

    while not stop:
        generation += 1
        sqrt_vals = np.sqrt(eigvals)
        xs = np.empty((lam, n))
        ys = np.empty((lam, n))
        for k in range(lam):
            for _ in range(RESAMPLE_CAP):
                z = rng.standard_normal(n)
                y = eigvecs @ (sqrt_vals * z)
                x = mean + sigma * y
                if np.all((x >= 0.0) & (x <= 1.0)):
                    break
            else:
                x = np.clip(x, 0.0, 1.0)
                y = (x - mean) / sigma
            xs[k] = x
            ys[k] = y

        fs = np.empty(lam)
        for k in range(lam):
            fs[k] = objective(xs[k])
        evaluations += lam

        order = np.argsort(fs, kind="stable")
        if fs[order[0]] < best_f:
            best_f = float(fs[order[0]])
            best_x = xs[order[0]].copy()

        sel = order[:mu]
        y_w = weights @ ys[sel]
        mean = mean + sigma * y_w

        # step-size path uses C^(-1/2) * y_w
        c_inv_half_y = eigvecs @ ((eigvecs.T @ y_w) / sqrt_vals)
        p_sigma = (1 - cs) * p_sigma + np.sqrt(cs * (2 - cs) * mu_eff) * c_inv_half_y
        ps_norm = np.linalg.norm(p_sigma)
        h_sigma = ps_norm / np.sqrt(1 - (1 - cs) ** (2 * generation)) < (
            1.4 + 2 / (n + 1)
        ) * chi_n
        p_cov = (1 - cc) * p_cov + h_sigma * np.sqrt(cc * (2 - cc) * mu_eff) * y_w

        delta_h = (1 - h_sigma) * cc * (2 - cc)
        cov = (
            (1 - c1 - cmu) * cov
            + c1 * (np.outer(p_cov, p_cov) + delta_h * cov)
            + cmu * (ys[sel].T * weights) @ ys[sel]
        )
        sigma *= float(np.exp((cs / damps) * (ps_norm / chi_n - 1)))

        cov = (cov + cov.T) / 2
        eigvals, eigvecs = np.linalg.eigh(cov)
        eigvals = np.maximum(eigvals, 1e-30)

        gen_best = float(fs[order[0]])
        history.append(gen_best)
        if len(history) > hist_len:
            history.pop(0)

        if best_f <= target_cost:
            stop = "target"
        elif evaluations >= max_evaluations:
            stop = "evaluations"
        elif sigma < SIGMA_FLOOR:
            stop = "sigma"
        elif eigvals[-1] / eigvals[0] > MAX_CONDITION:
            stop = "condition"
        elif (
            len(history) == hist_len
            and np.isfinite(history[0])
            and max(history) - min(history) < TOL_FUN
            and np.isfinite(fs[order[-1]])
            and fs[order[-1]] - fs[order[0]] < TOL_FUN
        ):
            stop = "stagnation"

    return CmaResult(x=best_x, fun=best_f, evaluations=evaluations, stop_reason=stop)
