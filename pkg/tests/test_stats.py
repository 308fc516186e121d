import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr, ndtri

from occlab.stats import (
    DistanceEstimate,
    bootstrap_se,
    distance_estimate,
    fit_rate,
    gaussian_quantile,
    kolmogorov_gaussian,
    standardize,
    wasserstein_gaussian,
)

EZ = math.sqrt(2 / math.pi)


def grid(m):
    return ndtri((np.arange(1, m + 1) - 0.5) / m)


samples = st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=60)


class TestQuantile:
    def test_examples(self):
        assert gaussian_quantile(0.5) == 0.0
        assert gaussian_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-9)

    def test_round_trip(self):
        for u in (1e-6, 0.3, 1 - 1e-6):
            assert abs(ndtr(gaussian_quantile(u)) - u) <= 1e-9

    def test_mpmath_reference(self):
        import mpmath

        mpmath.mp.dps = 40
        for u in (1e-9, 0.01, 0.2, 0.77, 0.999):
            ref = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(u) - 1))
            assert gaussian_quantile(u) == pytest.approx(ref, abs=1e-9)

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.2, 1.5, float("nan")])
    def test_rejects(self, u):
        with pytest.raises(ValueError):
            gaussian_quantile(u)


class TestWasserstein:
    def test_fixed_point(self):
        assert wasserstein_gaussian(grid(1000)) == 0.0

    def test_constant_sample(self):
        assert wasserstein_gaussian(np.zeros(10**6)) == pytest.approx(EZ, abs=1e-3)

    def test_scaled_grid(self):
        assert wasserstein_gaussian(2 * grid(10**6)) == pytest.approx(EZ, abs=2e-3)

    def test_consistency(self):
        x = np.random.default_rng(3).standard_normal(10**5)
        assert wasserstein_gaussian(x) <= 0.01

    @pytest.mark.parametrize("bad", [[], [1.0], [0.0, float("nan")], [float("inf"), 1.0]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            wasserstein_gaussian(bad)

    @given(samples, st.floats(-10, 10, allow_nan=False))
    @settings(max_examples=100, deadline=None)
    def test_translation_bound(self, xs, c):
        x = np.array(xs)
        assert abs(wasserstein_gaussian(x + c) - wasserstein_gaussian(x)) <= abs(c) + 1e-9

    @given(samples, st.randoms(use_true_random=False))
    @settings(max_examples=100, deadline=None)
    def test_permutation_invariance(self, xs, rnd):
        ys = list(xs)
        rnd.shuffle(ys)
        assert wasserstein_gaussian(xs) == wasserstein_gaussian(ys)
        assert kolmogorov_gaussian(xs) == kolmogorov_gaussian(ys)


class TestKolmogorov:
    def test_constant_sample(self):
        assert kolmogorov_gaussian(np.zeros(100)) == pytest.approx(0.5, abs=1e-15)

    def test_grid(self):
        for m in (10, 999, 10**5):
            assert kolmogorov_gaussian(grid(m)) <= 1 / (2 * m) + 1e-12

    def test_far_sample(self):
        assert kolmogorov_gaussian([1e6]) == pytest.approx(1.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            kolmogorov_gaussian([])

    @given(samples)
    @settings(max_examples=100, deadline=None)
    def test_range(self, xs):
        assert 0.0 <= kolmogorov_gaussian(xs) <= 1.0


class TestBootstrap:
    def test_seeded(self):
        x = np.random.default_rng(0).standard_normal(300)
        assert bootstrap_se(x) == bootstrap_se(x)
        est = distance_estimate(x)
        assert isinstance(est, DistanceEstimate) and est.m == 300 and est.se_proxy >= 0

    def test_covers_spread(self):
        rng = np.random.default_rng(42)
        dws, ses = [], []
        for _ in range(100):
            x = rng.exponential(size=400) - 1.0
            e = distance_estimate(x)
            dws.append(e.d_W)
            ses.append(e.se_proxy)
        ratio = np.std(dws, ddof=1) / np.mean(ses)
        assert 0.3 <= ratio <= 3.0


class TestFit:
    @pytest.mark.parametrize("alpha", [-0.5, -0.25])
    def test_power_law(self, alpha):
        pts = [(N, 3.0 * N**alpha) for N in (64, 128, 256, 512)]
        fit = fit_rate(pts)
        assert fit.slope == pytest.approx(alpha, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-10)
        assert fit.slope_se == pytest.approx(0.0, abs=1e-10)

    def test_midpoint(self):
        a, b = (10.0, 2.0), (1000.0, 0.02)
        mid = (math.sqrt(a[0] * b[0]), math.sqrt(a[1] * b[1]))
        fit = fit_rate([a, mid, b])
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)
        assert np.allclose(fit.predict([a[0], mid[0], b[0]]), [a[1], mid[1], b[1]], rtol=1e-12)

    @pytest.mark.parametrize("pts", [[(1, 1), (2, 1)], [(1, 1), (2, 0), (4, 1)], [(1, 1), (2, -1), (4, 1)]])
    def test_rejects(self, pts):
        with pytest.raises(ValueError):
            fit_rate(pts)


def test_standardize():
    assert np.allclose(standardize([1.0, 3.0], 2.0, 4.0), [-0.5, 0.5])
    with pytest.raises(ValueError):
        standardize([1.0], 0.0, 0.0)
