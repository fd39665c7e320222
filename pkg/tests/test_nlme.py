import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from exceptions import AllStartsFailedError, DomainError, InputError
from models import PLACEHOLDER_PK, ConstantModel, FribergModel
from nlme import (
    ErrorModel,
    FitResult,
    SaemConfig,
    StatModelSpec,
    aic,
    fit_predictions,
    log_likelihood_is,
    multi_start,
    sample_initial_estimates,
    saem_fit,
    start_seed,
)
from population import PopulationDistribution, TrialDataset

from conftest import constant_dataset

FAST_SAEM = SaemConfig(n_burnin=100, n_smoothing=100, mcmc_steps=3, seed=1)


def constant_spec(location=0.0, spread=0.5, error=1.0):
    return StatModelSpec(
        structural=ConstantModel(),
        fitted_params=[PopulationDistribution("phi", "identity", location, spread)],
        error_model=ErrorModel("additive", error),
    )


class FragileConstant(ConstantModel):
    """Cannot be evaluated above phi = 5."""

    def bind(self, values):
        phi = super().bind(values)
        if phi > 5.0:
            raise DomainError(f"phi too large ({phi})")
        return phi


class TestErrorModel:
    def test_additive_log_likelihood(self):
        err = ErrorModel("additive", 0.5)
        y, f = np.array([1.0, 2.0]), np.array([1.5, 2.0])
        expected = -2 * math.log(0.5 * math.sqrt(2 * math.pi)) - 0.5
        assert err.log_likelihood(y, f) == pytest.approx(expected)

    def test_proportional_scales_with_prediction(self):
        err = ErrorModel("proportional", 0.1)
        np.testing.assert_allclose(err.scale(np.array([2.0, -4.0])), [0.2, 0.4])
        assert err.param_name == "b"
        assert ErrorModel("additive_on_log10", 0.1).param_name == "a"

    def test_residual_statistic_ignores_error_parameter(self):
        y, f = np.array([1.1, 2.2]), np.array([1.0, 2.0])
        assert ErrorModel("proportional", 0.3).residual_statistic(y, f) == pytest.approx(0.1 ** 2 + 0.1 ** 2)

    @pytest.mark.parametrize("kind, value", [("exponential", 0.1), ("additive", 0.0), ("additive", float("inf"))])
    def test_invalid(self, kind, value):
        with pytest.raises(InputError):
            ErrorModel(kind, value)


class TestStatModelSpec:
    def friberg_spec(self):
        fitted = [
            PopulationDistribution("k_prol", "log", 0.0, 0.5),
            PopulationDistribution("k_tr", "log", 0.0, 0.5),
            PopulationDistribution("N0", "log", 1.6, 0.5),
            PopulationDistribution("EC50", "log", -2.0, 0.5),
            PopulationDistribution("k_circ", "log", 0.0, 0.0),
            PopulationDistribution("gamma", "log", -1.8, 0.0),
        ]
        return StatModelSpec(FribergModel(PLACEHOLDER_PK), fitted, ErrorModel("proportional", 0.1), {"Emax": 1.0})

    def test_partition(self):
        spec = self.friberg_spec()
        assert spec.random_names == ["k_prol", "k_tr", "N0", "EC50"]
        assert spec.fixed_effect_names == ["k_circ", "gamma"]
        assert spec.n_estimated == 6 + 4 + 1

    def test_linear_values(self):
        values = self.friberg_spec().linear_values(np.zeros(6))
        assert values["Emax"] == 1.0
        assert values["N0"] == 1.0

    def test_missing_and_duplicate_parameters(self):
        with pytest.raises(InputError, match="missing Emax"):
            StatModelSpec(FribergModel(PLACEHOLDER_PK), self.friberg_spec().fitted_params, ErrorModel("additive", 1.0))
        with pytest.raises(InputError, match="both fitted and fixed"):
            StatModelSpec(ConstantModel(), constant_spec().fitted_params, ErrorModel("additive", 1.0), {"phi": 1.0})

    def test_aic(self):
        assert aic(100.0, 5) == 110.0
        with pytest.raises(InputError):
            aic(1.0, 0)


class TestSaemConfig:
    def test_step_sizes(self):
        cfg = SaemConfig(n_burnin=10, n_smoothing=10, step_size_exponent=0.7)
        assert cfg.step_size(1) == 1.0
        assert cfg.step_size(10) == 1.0
        assert cfg.step_size(11) == 1.0
        assert cfg.step_size(14) == pytest.approx(4 ** -0.7)
        assert cfg.n_iterations == 20

    @pytest.mark.parametrize("kwargs", [{"n_burnin": 0}, {"step_size_exponent": 0.5}, {"annealing": 0.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(InputError):
            SaemConfig(**kwargs)


class TestSaem:
    def test_recovers_constant_model_parameters(self):
        data = constant_dataset(n_individuals=40, n_obs=5, mu=1.0, omega=0.5, a=0.3, seed=3)
        fit = saem_fit(data, constant_spec(), cfg=FAST_SAEM)
        law = fit.distribution("phi")
        assert law.location == pytest.approx(1.0, abs=0.25)
        assert 0.3 < law.spread < 0.75
        assert fit.error_model.value == pytest.approx(0.3, rel=0.2)
        assert len(fit.trace) == FAST_SAEM.n_iterations
        assert fit.individual_ids() == list(range(1, 41))
        assert math.isnan(fit.minus2LL)

    def test_is_deterministic(self):
        data = constant_dataset(seed=4)
        a = saem_fit(data, constant_spec(), cfg=FAST_SAEM)
        b = saem_fit(data, constant_spec(), cfg=FAST_SAEM)
        assert a.trace == b.trace
        assert a.individual_estimates == b.individual_estimates

    def test_row_order_does_not_change_the_fit(self):
        data = constant_dataset(n_individuals=10, seed=14)
        order = np.random.default_rng(0).permutation(len(data.ids))
        shuffled = TrialDataset(ids=data.ids[order], times=data.times[order], observations=data.observations[order])
        a = saem_fit(data, constant_spec(), cfg=FAST_SAEM)
        b = saem_fit(shuffled, constant_spec(), cfg=FAST_SAEM)
        assert a.trace == b.trace
        assert a.population == b.population
        assert a.individual_estimates == b.individual_estimates

    def test_fixed_effect_converges_to_mean(self):
        data = constant_dataset(n_individuals=5, n_obs=4, seed=5)
        fit = saem_fit(data, constant_spec(spread=0.0), cfg=FAST_SAEM)
        assert fit.distribution("phi").spread == 0.0
        assert fit.distribution("phi").location == pytest.approx(float(np.mean(data.observations)), abs=1e-3)
        assert fit.random_effects == {i: {} for i in range(1, 6)}

    def test_fixed_effect_trace_approaches_mean_monotonically(self):
        # quadratic objective: each Newton step lands on the mean unless clipped
        data = constant_dataset(n_individuals=8, n_obs=5, omega=0.0, seed=15)
        target = float(np.mean(data.observations))
        fit = saem_fit(data, constant_spec(location=-1.0, spread=0.0, error=2.0), cfg=FAST_SAEM)
        distances = [abs(row["phi_location"] - target) for row in fit.trace]
        assert all(later <= earlier + 1e-9 for earlier, later in zip(distances, distances[1:]))
        assert max(distances[10:]) < 1e-6

    def test_initial_values(self):
        fit = saem_fit(constant_dataset(seed=6), constant_spec(), init={"phi": 2.0}, cfg=FAST_SAEM, start_index=7)
        assert fit.init == {"phi": 2.0}
        assert fit.start_index == 7
        with pytest.raises(InputError, match="unknown"):
            saem_fit(constant_dataset(), constant_spec(), init={"psi": 1.0}, cfg=FAST_SAEM)

    def test_empty_dataset(self):
        empty = constant_dataset().subset([])
        with pytest.raises(InputError):
            saem_fit(empty, constant_spec(), cfg=FAST_SAEM)


class TestImportanceSampling:
    MU, OMEGA, A = 1.0, 0.5, 0.3

    def exact_minus2LL(self, data):
        total = 0.0
        for ind_id in data.individual_ids():
            _, y = data.observations_for(ind_id)
            n = len(y)
            cov = self.OMEGA ** 2 * np.ones((n, n)) + self.A ** 2 * np.eye(n)
            total += multivariate_normal(mean=np.full(n, self.MU), cov=cov).logpdf(y)
        return -2.0 * total

    def make_fit(self, data, offset):
        """Fit at the true parameters whose stored modes sit `offset` posterior sds from the exact mode."""
        effects, estimates = {}, {}
        for ind_id in data.individual_ids():
            _, y = data.observations_for(ind_id)
            precision = 1.0 / self.OMEGA ** 2 + len(y) / self.A ** 2
            mode = (self.MU / self.OMEGA ** 2 + y.sum() / self.A ** 2) / precision
            eta = mode - self.MU + offset / math.sqrt(precision)
            effects[ind_id] = {"phi": eta}
            estimates[ind_id] = {"phi": self.MU + eta}
        return FitResult(
            population=[PopulationDistribution("phi", "identity", self.MU, self.OMEGA)],
            error_model=ErrorModel("additive", self.A),
            individual_estimates=estimates,
            random_effects=effects,
            n_estimated=3,
            seed=0,
        )

    def spec(self):
        return constant_spec(self.MU, self.OMEGA, self.A)

    def test_exact_at_conditional_mode(self):
        data = constant_dataset(n_individuals=6, n_obs=4, seed=8)
        estimate = log_likelihood_is(self.make_fit(data, 0.0), data, self.spec(), n_is_samples=50, seed=1)
        assert estimate.minus2LL == pytest.approx(self.exact_minus2LL(data), abs=1e-5)
        assert estimate.n_fallbacks == 0

    def test_standard_error_covers_exact_value(self):
        data = constant_dataset(n_individuals=6, n_obs=4, seed=9)
        fit = self.make_fit(data, 0.5)
        exact = self.exact_minus2LL(data)
        covered = 0
        for seed in range(40):
            estimate = log_likelihood_is(fit, data, self.spec(), n_is_samples=200, seed=seed)
            assert estimate.mc_se > 0
            covered += abs(estimate.minus2LL - exact) <= max(3 * estimate.mc_se, 1e-6)
        assert covered >= 36

    def test_fixed_effects_only_is_exact_gaussian(self):
        data = constant_dataset(seed=10)
        fit = saem_fit(data, constant_spec(spread=0.0), cfg=FAST_SAEM)
        estimate = log_likelihood_is(fit, data, constant_spec(spread=0.0), n_is_samples=10)
        mu, a = fit.distribution("phi").location, fit.error_model.value
        r = (data.observations - mu) / a
        expected = float(np.sum(r * r) + 2 * len(r) * math.log(a) + len(r) * math.log(2 * math.pi))
        assert estimate.minus2LL == pytest.approx(expected)
        assert estimate.mc_se == 0.0

    def test_rejects_bad_sample_count(self):
        data = constant_dataset()
        with pytest.raises(InputError):
            log_likelihood_is(self.make_fit(data, 0.0), data, self.spec(), n_is_samples=0)


class TestMultiStart:
    def test_sample_initial_estimates(self):
        bounds = {"k": (0.1, 10.0), "x": (-1.0, 1.0), "c": (2.0, 2.0)}
        draws = sample_initial_estimates(bounds, 200, seed=3, transforms={"k": "log", "c": "log"})
        assert draws == sample_initial_estimates(bounds, 200, seed=3, transforms={"k": "log", "c": "log"})
        k = np.array([d["k"] for d in draws])
        assert np.all((k >= 0.1) & (k <= 10.0))
        # log-uniform: about half the draws below the geometric midpoint 1
        assert 0.35 < np.mean(k < 1.0) < 0.65
        assert all(d["c"] == 2.0 for d in draws)

    @pytest.mark.parametrize("bounds", [{"k": (2.0, 1.0)}, {"k": (0.0, 1.0)}, {"k": (0.0, float("inf"))}])
    def test_bad_bounds(self, bounds):
        with pytest.raises(InputError):
            sample_initial_estimates(bounds, 3, seed=0, transforms={"k": "log"})

    def test_start_seeds_differ(self):
        assert len({start_seed(5, k) for k in range(50)}) == 50

    def test_ranked_by_aic(self):
        data = constant_dataset(seed=11)
        result = multi_start(data, constant_spec(), {"phi": (0.0, 2.0)}, 3, FAST_SAEM, n_is_samples=100)
        assert result.n_starts == 3
        assert not result.partial_failure
        aics = [f.aic for f in result.fits]
        assert aics == sorted(aics)
        assert sorted(f.start_index for f in result.fits) == [0, 1, 2]
        assert len({f.seed for f in result.fits}) == 3
        assert result.top(2) == result.fits[:2]

    def test_partial_failure(self):
        spec = StatModelSpec(FragileConstant(), constant_spec().fitted_params, ErrorModel("additive", 1.0))
        result = multi_start(
            constant_dataset(seed=12), spec, {}, 2, FAST_SAEM, n_is_samples=50,
            initial_estimates=[{"phi": 1.0}, {"phi": 20.0}],
        )
        assert result.partial_failure
        assert [f.start_index for f in result.fits] == [0]
        assert result.failures[0].start_index == 1

    def test_all_starts_failed(self):
        spec = StatModelSpec(FragileConstant(), constant_spec().fitted_params, ErrorModel("additive", 1.0))
        with pytest.raises(AllStartsFailedError):
            multi_start(constant_dataset(), spec, {}, 1, FAST_SAEM, initial_estimates=[{"phi": 20.0}])

    def test_unknown_bounds(self):
        with pytest.raises(InputError):
            multi_start(constant_dataset(), constant_spec(), {"psi": (0.0, 1.0)}, 2, FAST_SAEM)


def test_fit_predictions():
    data = constant_dataset(n_individuals=3, n_obs=4, seed=13)
    fit = saem_fit(data, constant_spec(), cfg=FAST_SAEM)
    frame = fit_predictions(fit, data, constant_spec(), n_grid=5)
    assert list(frame.columns) == ["ID", "kind", "TIME", "Y", "PRED"]
    obs = frame[frame["kind"] == "obs"]
    assert len(obs) == 12
    assert len(frame[frame["kind"] == "grid"]) == 15
    for ind_id, rows in obs.groupby("ID"):
        np.testing.assert_allclose(rows["PRED"], fit.individual_estimates[ind_id]["phi"])
