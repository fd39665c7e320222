import math

import numpy as np
import pytest
from scipy import integrate

from appendix import (
    EXPGROWTH_TIMES,
    CommonDraws,
    ExpGrowthDataset,
    LikelihoodSample,
    generate_expgrowth_data,
    landscape_points,
    landscape_summary,
    likelihood_landscape,
    mc_loglik,
    top_region_diameter,
)
from exceptions import InputError


def exact_loglik(data, mu_a, mu_b):
    """Replicate integrals over s = a + b using the hypoexponential density, by quadrature."""
    t = data.times
    total = 0.0
    for y in data.y - math.log(data.x0):
        def integrand(s):
            density = (math.exp(-s / mu_a) - math.exp(-s / mu_b)) / (mu_a - mu_b)
            r = y - s * t
            return math.exp(-float(r @ r) / (2.0 * data.sigma2)) * density

        value, _ = integrate.quad(integrand, 0.0, 60.0, limit=400, points=[min(max(float(y[-1]), 0.01), 59.0)])
        total += math.log(value)
    return total


class TestData:
    def test_shape_and_truth(self):
        data = generate_expgrowth_data(20, seed=3)
        assert data.y.shape == (20, len(EXPGROWTH_TIMES))
        assert data.n == 20
        assert np.all(data.a > 0) and np.all(data.b > 0)

    def test_is_deterministic(self):
        a = generate_expgrowth_data(5, seed=8)
        b = generate_expgrowth_data(5, seed=8)
        np.testing.assert_array_equal(a.y, b.y)
        assert not np.array_equal(a.y, generate_expgrowth_data(5, seed=9).y)

    def test_noise_free_limit(self):
        data = generate_expgrowth_data(3, sigma2=1e-12, x0=2.0, seed=1)
        expected = math.log(2.0) + np.outer(data.a + data.b, data.times)
        np.testing.assert_allclose(data.y, expected, atol=1e-4)

    @pytest.mark.parametrize("kwargs", [{"n": 0}, {"n": 5, "mu_a": 0.0}, {"n": 5, "sigma2": 0.0}])
    def test_errors(self, kwargs):
        with pytest.raises(InputError):
            generate_expgrowth_data(**kwargs)

    def test_dataset_validation(self):
        with pytest.raises(InputError):
            ExpGrowthDataset(y=np.zeros((2, 3)))
        with pytest.raises(InputError):
            ExpGrowthDataset(y=np.full((1, 6), np.nan))


class TestMonteCarloLikelihood:
    def test_swapping_means_is_bit_identical(self):
        data = generate_expgrowth_data(20, seed=4)
        for mu_a, mu_b in [(1.0, 0.1), (0.37, 1.52), (0.02, 1.9)]:
            first = mc_loglik(data, mu_a, mu_b, n_mc=2000, seed=7)
            second = mc_loglik(data, mu_b, mu_a, n_mc=2000, seed=7)
            assert first.loglik == second.loglik
            assert first.mc_se == second.mc_se

    def test_matches_quadrature(self):
        data = generate_expgrowth_data(5, seed=2)
        for mu_a, mu_b in [(1.0, 0.1), (0.6, 0.4)]:
            sample = mc_loglik(data, mu_a, mu_b, n_mc=20_000, seed=1)
            assert sample.loglik == pytest.approx(exact_loglik(data, mu_a, mu_b), abs=max(4 * sample.mc_se, 1e-6))

    def test_is_deterministic(self):
        data = generate_expgrowth_data(5, seed=2)
        assert mc_loglik(data, 0.5, 0.5, n_mc=500, seed=3) == mc_loglik(data, 0.5, 0.5, n_mc=500, seed=3)

    def test_errors(self):
        data = generate_expgrowth_data(5, seed=2)
        with pytest.raises(InputError):
            mc_loglik(data, 0.0, 1.0, n_mc=500)
        with pytest.raises(InputError):
            mc_loglik(data, 1.0, 1.0, n_mc=10)
        with pytest.raises(InputError, match="even"):
            mc_loglik(data, 1.0, 1.0, n_mc=501)

    def test_sample_count_matches_request(self):
        assert CommonDraws(3, 400, seed=1).first.shape == (3, 400)


class TestLandscape:
    def test_ranks_and_top_flags(self):
        data = generate_expgrowth_data(20, seed=5)
        samples = likelihood_landscape(data, n_points=40, n_mc=500, seed=6)
        assert len(samples) == 40
        assert sorted(s.rank for s in samples) == list(range(1, 41))
        assert sum(s.top for s in samples) == 2
        best = min(samples, key=lambda s: s.rank)
        assert best.loglik == max(s.loglik for s in samples)
        assert all(s.top == (s.rank <= 2) for s in samples)

    def test_is_deterministic_and_independent_of_workers(self):
        data = generate_expgrowth_data(5, seed=5)
        serial = likelihood_landscape(data, n_points=12, n_mc=200, seed=6)
        again = likelihood_landscape(data, n_points=12, n_mc=200, seed=6)
        parallel = likelihood_landscape(data, n_points=12, n_mc=200, seed=6, workers=2)
        assert serial == again
        assert [s.loglik for s in serial] == [s.loglik for s in parallel]

    def test_grid_points_are_swap_symmetric(self):
        data = generate_expgrowth_data(5, seed=5)
        grid = [(1.0, 0.1), (0.1, 1.0), (0.5, 0.8), (0.8, 0.5)]
        samples = likelihood_landscape(data, sampler="grid", grid=grid, n_mc=400, top_fraction=0.5)
        assert samples[0].loglik == samples[1].loglik
        assert samples[2].loglik == samples[3].loglik
        assert [(s.mu_a, s.mu_b) for s in samples] == grid

    def test_uniform_points_stay_in_box(self):
        points = landscape_points(n_points=100, seed=1, box=((0.5, 1.0), (0.01, 0.2)))
        assert len(points) == 100
        assert all(0.5 <= a <= 1.0 and 0.01 <= b <= 0.2 for a, b in points)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"sampler": "sobol"},
            {"sampler": "grid"},
            {"sampler": "grid", "grid": [(0.0, 1.0)]},
            {"box": ((0.0, 1.0), (0.1, 1.0))},
            {"n_points": 0},
        ],
    )
    def test_point_errors(self, kwargs):
        with pytest.raises(InputError):
            landscape_points(**kwargs)

    def test_top_fraction_must_be_positive(self):
        with pytest.raises(InputError):
            likelihood_landscape(generate_expgrowth_data(2), n_points=5, n_mc=100, top_fraction=0.0)


def test_top_region_diameter_and_summary():
    samples = [
        LikelihoodSample(1.0, 0.1, -1.0, 0.01, top=True),
        LikelihoodSample(0.1, 1.0, -1.0, 0.01, top=True),
        LikelihoodSample(2.0, 2.0, -50.0, 0.01),
    ]
    assert top_region_diameter(samples) == pytest.approx(math.hypot(0.9, 0.9))
    summary = landscape_summary(samples)
    assert summary["n_points"] == 3
    assert summary["n_top"] == 2
    assert summary["max_top_distance_to_truth"] == 0.0
    assert top_region_diameter(samples[:1]) == 0.0
