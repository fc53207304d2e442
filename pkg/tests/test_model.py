import math

import numpy as np
import pytest

from lpplscan.model import (
    DegenerateBasisError,
    LpplsParams,
    Window,
    cost,
    design_matrix,
    lppls_eval,
    residuals,
    solve_linear,
    subordinate,
    window_arrays,
)
from lpplscan.synth import SynthSpec, generate, paper_like_params


def scalar_formula(p, t):
    """Independent scalar-path evaluation of the model formula."""
    dt = p.tc - t
    pw = dt**p.m
    phase = p.omega * math.log(dt)
    return p.A + p.B * pw + p.C1 * pw * math.cos(phase) + p.C2 * pw * math.sin(phase)


def qr_lstsq(X, y):
    """Householder-QR least squares: the orthogonal-decomposition oracle."""
    q, r = np.linalg.qr(X)
    return np.linalg.solve(r, q.T @ y)


def normal_equations(X, y):
    """Gram-matrix solve in the form the basis functions define it."""
    return np.linalg.solve(X.T @ X, X.T @ y)


class TestEval:
    def test_constant_when_only_a(self):
        p = LpplsParams(tc=120.0, m=0.37, omega=11.0, A=4.2, B=0.0, C1=0.0, C2=0.0)
        t = np.linspace(0, 100, 37)
        np.testing.assert_array_equal(lppls_eval(p, t), np.full(37, 4.2))

    def test_pure_linear_case(self):
        p = LpplsParams(tc=100.0, m=1.0, omega=5.0, A=10.0, B=-1.0, C1=0.0, C2=0.0)
        assert lppls_eval(p, 90.0) == pytest.approx(0.0, abs=1e-12)

    def test_matches_scalar_oracle(self):
        p = LpplsParams(tc=100.0, m=0.5, omega=8.0, A=10.0, B=-1.0, C1=0.1, C2=0.05)
        got = lppls_eval(p, 90.0)
        assert got == pytest.approx(7.0595592873178346, abs=1e-12)
        assert got == pytest.approx(scalar_formula(p, 90.0), abs=1e-12)

    def test_domain_violation(self):
        p = LpplsParams(tc=50.0, m=0.5, omega=8.0, A=1.0, B=-0.1, C1=0.0, C2=0.0)
        with pytest.raises(ValueError, match="below tc"):
            lppls_eval(p, 50.0)

    def test_finite_difference_derivative(self):
        p = LpplsParams(tc=300.0, m=0.45, omega=7.5, A=8.0, B=-0.04, C1=0.001, C2=-0.0008)

        def analytic(t):
            dt = p.tc - t
            pw = dt**p.m
            phase = p.omega * math.log(dt)
            cosv, sinv = math.cos(phase), math.sin(phase)
            d_pw = -p.m * dt ** (p.m - 1)
            d_phase = -p.omega / dt
            return (
                p.B * d_pw
                + p.C1 * (d_pw * cosv - pw * sinv * d_phase)
                + p.C2 * (d_pw * sinv + pw * cosv * d_phase)
            )

        for t in (10.0, 120.0, 250.0):
            h = 1e-5 * max(1.0, abs(t))
            fd = (lppls_eval(p, t + h) - lppls_eval(p, t - h)) / (2 * h)
            assert fd == pytest.approx(analytic(t), rel=1e-5)

    def test_damping_and_c(self):
        p = LpplsParams(tc=1.0, m=0.5, omega=10.0, A=0.0, B=-2.0, C1=0.03, C2=0.04)
        assert p.C == pytest.approx(0.05)
        assert p.damping == pytest.approx(0.5 * 2.0 / (10.0 * 0.05))
        pure = LpplsParams(tc=1.0, m=0.5, omega=10.0, A=0.0, B=-2.0, C1=0.0, C2=0.0)
        assert pure.damping == math.inf


class TestWindow:
    def test_length_and_points(self):
        w = Window(t1=10, t2=260)
        assert w.length == 250
        assert w.n_points == 251

    def test_rejects_too_short(self):
        with pytest.raises(ValueError):
            Window(t1=0, t2=20)
        with pytest.raises(ValueError):
            Window(t1=5, t2=5)


class TestSolveLinear:
    def test_exact_recovery_zero_residual(self, bubble_params, bubble_series):
        w = Window(t1=0, t2=259)
        p = bubble_params
        a, b, c1, c2 = solve_linear(bubble_series, w, p.tc, p.m, p.omega)
        assert a == pytest.approx(p.A, rel=1e-8)
        assert b == pytest.approx(p.B, rel=1e-8)
        assert c1 == pytest.approx(p.C1, rel=1e-8)
        assert c2 == pytest.approx(p.C2, rel=1e-8)

    def test_constant_series_full_rank_solution(self):
        spec = SynthSpec(
            params=LpplsParams(tc=400.0, m=0.5, omega=9.0, A=3.7, B=0.0, C1=0.0, C2=0.0),
            n_days=120,
        )
        series = generate(spec)
        a, b, c1, c2 = solve_linear(series, Window(0, 119), 140.0, 0.6, 7.0)
        assert a == pytest.approx(3.7, abs=1e-8)
        assert abs(b) < 1e-8 and abs(c1) < 1e-8 and abs(c2) < 1e-8

    def test_matches_independent_oracles(self):
        rng = np.random.default_rng(2024)
        for _ in range(25):
            n = int(rng.integers(40, 200))
            spec = SynthSpec(
                params=paper_like_params(tc=n + 60.0), n_days=n,
                noise_sigma=0.03, seed=int(rng.integers(0, 2**31)),
            )
            series = generate(spec)
            w = Window(0, n - 1)
            tc = n - 1 + float(rng.uniform(2.0, 80.0))
            m = float(rng.uniform(0.05, 0.95))
            omega = float(rng.uniform(2.0, 25.0))
            got = np.array(solve_linear(series, w, tc, m, omega))
            t, y = window_arrays(series, w)
            X = design_matrix(t, tc, m, omega)
            for oracle in (qr_lstsq, normal_equations):
                want = oracle(X, y)
                np.testing.assert_allclose(got, want, rtol=1e-8, atol=1e-10)

    def test_degenerate_basis_reported(self, bubble_series):
        # m == 0 collapses the power-law column onto the intercept
        with pytest.raises(DegenerateBasisError):
            solve_linear(bubble_series, Window(0, 259), 280.0, 0.0, 9.0)

    def test_tc_inside_window_rejected(self, bubble_series):
        with pytest.raises(ValueError, match="beyond the window end"):
            solve_linear(bubble_series, Window(0, 259), 200.0, 0.5, 9.0)


class TestCost:
    def test_noiseless_at_truth_is_zero(self, bubble_params, bubble_series):
        p = bubble_params
        value = cost(bubble_series, Window(0, 259), p.tc, p.m, p.omega)
        assert value <= 1e-16 * len(bubble_series)

    def test_translation_invariance(self, bubble_series):
        w = Window(0, 259)
        base = cost(bubble_series, w, 272.0, 0.45, 8.0)
        shifted = bubble_series.__class__(
            bubble_series.dates,
            bubble_series.closes * math.e**2,
            bubble_series.log_closes + 2.0,
        )
        assert cost(shifted, w, 272.0, 0.45, 8.0) == pytest.approx(base, abs=1e-10)

    def test_matches_grid_search_oracle(self):
        # dense grid over the four linear parameters on a tiny window
        n = 40
        true = LpplsParams(tc=55.0, m=0.5, omega=6.0, A=2.0, B=-0.08, C1=0.002, C2=-0.001)
        series = generate(SynthSpec(params=true, n_days=n, noise_sigma=0.01, seed=5))
        w = Window(0, n - 1)
        tc, m, omega = 55.0, 0.5, 6.0
        got = cost(series, w, tc, m, omega)

        t, y = window_arrays(series, w)
        X = design_matrix(t, tc, m, omega)
        beta_hat = qr_lstsq(X, y)
        spans = [0.02, 0.02, 0.02, 0.02]
        axes = [np.linspace(b - s, b + s, 9) for b, s in zip(beta_hat, spans)]
        grid_min = math.inf
        for a_ in axes[0]:
            for b_ in axes[1]:
                base = y - a_ - b_ * X[:, 1]
                for c1_ in axes[2]:
                    partial = base - c1_ * X[:, 2]
                    for c2_ in axes[3]:
                        r = partial - c2_ * X[:, 3]
                        grid_min = min(grid_min, float(r @ r))
        # the continuous optimum can undercut any grid point by at most the
        # quadratic growth over half a grid cell
        half_step = np.array([axes[i][1] - axes[i][0] for i in range(4)]) / 2
        slack = float(half_step @ (X.T @ X) @ half_step)
        assert got <= grid_min + 1e-12
        assert grid_min - got <= slack + 1e-12

    def test_degenerate_inputs_get_sentinel(self, bubble_series):
        w = Window(0, 259)
        assert cost(bubble_series, w, 280.0, 0.0, 9.0) == math.inf
        assert cost(bubble_series, w, 100.0, 0.5, 9.0) == math.inf

    def test_residual_orthogonal_to_basis(self, bubble_series):
        rng = np.random.default_rng(7)
        w = Window(20, 240)
        t, y_clean = window_arrays(bubble_series, w)
        y = y_clean + rng.normal(0, 0.02, t.shape[0])
        tc, m, omega = 255.0, 0.4, 11.0
        fit = subordinate(t, y, tc, m, omega)
        X = design_matrix(t, tc, m, omega)
        beta = np.array([fit.A, fit.B, fit.C1, fit.C2])
        r = y - X @ beta
        for j in range(4):
            rel = abs(X[:, j] @ r) / (np.linalg.norm(X[:, j]) * np.linalg.norm(r))
            assert rel <= 1e-8


class TestResiduals:
    def test_zero_for_perfect_params(self, bubble_params, bubble_series):
        res = residuals(bubble_series, Window(0, 259), bubble_params)
        assert np.max(np.abs(res)) < 1e-10
