import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpplscan.indicator import StoredFit
from lpplscan.postmortem import (
    EmptySelectionError,
    collect_fits,
    density_grid,
    kde,
    quantiles,
    report,
    silverman_bandwidth,
    skewness,
)
from lpplscan.synth import SynthSpec, generate, paper_like_params


def brute_force_kde(samples, grid, h):
    """Independent double-loop summation of the Gaussian kernel density."""
    out = np.zeros(len(grid))
    for i, x in enumerate(grid):
        acc = 0.0
        for s in samples:
            acc += math.exp(-0.5 * ((x - s) / h) ** 2)
        out[i] = acc / (len(samples) * h * math.sqrt(2 * math.pi))
    return out


def sort_quantile_oracle(samples, level):
    """Linear interpolation between closest ranks, from first principles."""
    xs = sorted(samples)
    pos = level * (len(xs) - 1)
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    return xs[lo] + (pos - lo) * (xs[hi] - xs[lo])


def stored_fit(endpoint_date, t1, tc, sign="positive", endpoint_index=500, t2=500):
    return StoredFit(
        endpoint_date=endpoint_date, endpoint_index=endpoint_index,
        t1=t1, t1_date=dt.date(2018, 1, 1), t2=t2, t2_date=endpoint_date,
        tc=tc, tc_date=endpoint_date, m=0.5, omega=9.0,
        A=8.0, B=-0.05, C1=0.001, C2=0.001, cost=0.01,
        bubble_sign=sign, filters={}, seed=0,
    )


class TestKde:
    def test_single_sample_bump_integrates_to_one(self):
        h = silverman_bandwidth(np.array([5.0]))
        grid = density_grid(np.array([5.0]), h)
        values = kde([5.0], grid)
        assert np.all(values >= 0)
        assert float(np.trapezoid(values, grid)) == pytest.approx(1.0, abs=1e-6)
        assert grid[int(np.argmax(values))] == pytest.approx(5.0, abs=h / 10)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(17)
        samples = np.concatenate([rng.normal(0, 1, 100), rng.normal(6, 0.5, 100)])
        h = silverman_bandwidth(samples)
        grid = density_grid(samples, h, points=128)
        got = kde(samples, grid, bandwidth=h, normalize=False)
        want = brute_force_kde(samples, grid, h)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-10)

    def test_identical_samples_use_bandwidth_floor(self):
        samples = np.full(25, 42.0)
        h = silverman_bandwidth(samples)
        assert h == 1.0
        grid = density_grid(samples, h)
        values = kde(samples, grid)
        assert np.all(np.isfinite(values))
        assert float(np.trapezoid(values, grid)) == pytest.approx(1.0, abs=1e-6)

    def test_linearity_in_sample_concatenation(self):
        rng = np.random.default_rng(3)
        a = rng.normal(0, 1, 60)
        b = rng.normal(3, 2, 140)
        grid = np.linspace(-5, 10, 200)
        h = 0.8
        combined = kde(np.concatenate([a, b]), grid, bandwidth=h, normalize=False)
        weighted = (60 * kde(a, grid, bandwidth=h, normalize=False)
                    + 140 * kde(b, grid, bandwidth=h, normalize=False)) / 200
        np.testing.assert_allclose(combined, weighted, rtol=0, atol=1e-10)

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            kde([], np.linspace(0, 1, 10))


class TestQuantiles:
    def test_extreme_levels(self):
        xs = [3.0, 1.0, 7.0, 5.0]
        assert quantiles(xs, [0.0])[0] == 1.0
        assert quantiles(xs, [1.0])[0] == 7.0

    def test_matches_sorting_oracle(self):
        rng = np.random.default_rng(11)
        samples = rng.normal(0, 10, 137)
        levels = rng.uniform(0, 1, 20)
        got = quantiles(samples, levels)
        for level, value in zip(levels, got):
            assert value == pytest.approx(sort_quantile_oracle(samples, level), abs=1e-12)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
           st.floats(0, 1), st.floats(0, 1))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_level(self, xs, a, b):
        lo, hi = sorted((a, b))
        q = quantiles(xs, [lo, hi])
        assert q[0] <= q[1]

    def test_bad_levels_rejected(self):
        with pytest.raises(ValueError):
            quantiles([1.0], [1.5])


class TestSkewness:
    def test_symmetric_sample_near_zero(self):
        rng = np.random.default_rng(8)
        x = rng.normal(0, 1, 4000)
        # standard error of the skewness is about sqrt(6/n)
        assert abs(skewness(x)) <= 3 * math.sqrt(6 / 4000)

    def test_right_skewed_positive(self):
        rng = np.random.default_rng(9)
        assert skewness(rng.lognormal(0, 1, 2000)) > 0

    def test_degenerate(self):
        assert skewness([1.0, 1.0, 1.0]) == 0.0


class TestCollectFits:
    def cluster(self):
        d0 = dt.date(2020, 2, 10)
        fits = []
        for k in range(6):
            date = d0 + dt.timedelta(days=k)
            fits.append(stored_fit(date, t1=100 + k, tc=520.0 + k))
        fits.append(stored_fit(d0, t1=90, tc=500.0, sign="negative"))
        return fits

    def test_sign_and_range_filter(self):
        fits = self.cluster()
        got = collect_fits(fits, dt.date(2020, 2, 10), dt.date(2020, 2, 12), "positive")
        assert len(got) == 3
        neg = collect_fits(fits, dt.date(2020, 2, 10), dt.date(2020, 2, 12), "negative")
        assert len(neg) == 1

    def test_empty_selection_raises(self):
        with pytest.raises(EmptySelectionError):
            collect_fits(self.cluster(), dt.date(2021, 1, 1), dt.date(2021, 2, 1))

    def test_partition_union_identity(self):
        fits = self.cluster()
        full = collect_fits(fits, dt.date(2020, 2, 10), dt.date(2020, 2, 15))
        left = collect_fits(fits, dt.date(2020, 2, 10), dt.date(2020, 2, 12))
        right = collect_fits(fits, dt.date(2020, 2, 13), dt.date(2020, 2, 15))
        assert len(full) == len(left) + len(right)
        assert {id(f) for f in full} == {id(f) for f in left + right}


class TestReport:
    def make_population(self, series):
        rng = np.random.default_rng(42)
        # positively skewed tc cloud just past the series end
        tcs = 900.0 + rng.gamma(2.0, 8.0, 120)
        t1s = rng.integers(100, 400, 120)
        fits = [
            stored_fit(series.dates[880], t1=int(t1), tc=float(tc),
                       endpoint_index=880, t2=880)
            for t1, tc in zip(t1s, tcs)
        ]
        return fits, tcs

    @pytest.fixture
    def series(self):
        return generate(SynthSpec(params=paper_like_params(tc=1000.0), n_days=901))

    def test_densities_normalized(self, series):
        fits, _ = self.make_population(series)
        rep = report(fits, series)
        for density in (rep.tc_density, rep.t1_density):
            assert np.all(density.values >= 0)
            integral = float(np.trapezoid(density.values, density.grid))
            assert integral == pytest.approx(1.0, abs=1e-6)

    def test_quantiles_nondecreasing_and_bracketing(self, series):
        fits, tcs = self.make_population(series)
        rep = report(fits, series, quantile_levels=(0.05, 0.2, 0.8, 0.95))
        dates = [rep.tc_quantiles[level] for level in (0.05, 0.2, 0.8, 0.95)]
        assert dates == sorted(dates)
        assert rep.tc_quantile_positions[0.05] == pytest.approx(
            float(np.quantile(tcs, 0.05)))

    def test_skewness_and_mode(self, series):
        fits, tcs = self.make_population(series)
        rep = report(fits, series)
        assert rep.tc_skewness > 0
        # gamma(2, 8): mode at 8 above the offset, well below the mean
        assert rep.tc_mode_date < rep.tc_quantiles[0.8]

    def test_t1_range(self, series):
        fits, _ = self.make_population(series)
        rep = report(fits, series)
        t1_min = min(f.t1 for f in fits)
        t1_max = max(f.t1 for f in fits)
        assert rep.t1_range == (series.dates[t1_min], series.dates[t1_max])

    def test_empty_population_rejected(self, series):
        with pytest.raises(EmptySelectionError):
            report([], series)
