import numpy as np
import pandas as pd
import pytest

from exceptions import DatasetSchemaError, DomainError, InputError
from models import ConstantModel
from ode import DoseEvent
from population import (
    NoiseModel,
    PopulationDistribution,
    StudyDesign,
    TrialDataset,
    friberg_design,
    generate_synthetic,
    individual_param,
    sample_population,
    simulate_trajectories,
    tiv_design,
)

from conftest import FRIBERG_TYPICAL, TIV_TYPICAL

FRIBERG_POPULATION = [
    PopulationDistribution.from_value("N0", "log", 5.03, 0.22),
    PopulationDistribution.from_value("EC50", "log", 0.14, 0.33),
    PopulationDistribution.from_value("k_tr", "log", 1.08, 0.41),
    PopulationDistribution.from_value("k_prol", "log", 0.87, 0.42),
]

TIV_POPULATION = [
    PopulationDistribution.from_value("beta", "log", 8e-7, 0.35),
    PopulationDistribution.from_value("p", "log", 3500.0, 0.4),
    PopulationDistribution.from_value("delta", "log", 0.25, 0.35),
    PopulationDistribution.from_value("T0", "log", 1.5e6, 0.45),
    PopulationDistribution("V0", "log10", 1.0, 0.25),
]


class TestPopulationDistribution:
    def test_from_value_sets_location_on_transformed_scale(self):
        assert PopulationDistribution.from_value("k", "log", np.e, 0.1).location == pytest.approx(1.0)
        assert PopulationDistribution.from_value("V0", "log10", 100.0).location == pytest.approx(2.0)
        assert PopulationDistribution.from_value("x", "identity", -3.0).location == -3.0

    def test_typical_value_round_trips(self):
        d = PopulationDistribution.from_value("T0", "log", 1.5e6, 0.45)
        assert d.typical_value == pytest.approx(1.5e6)
        assert d.is_random

    def test_zero_spread_is_fixed_effect(self):
        assert not PopulationDistribution("gamma", "log", 0.0).is_random

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"name": "a", "transform": "logit", "location": 0.0},
            {"name": "a", "transform": "log", "location": float("nan")},
            {"name": "a", "transform": "log", "location": 0.0, "spread": -0.1},
        ],
    )
    def test_invalid_laws_are_rejected(self, kwargs):
        with pytest.raises(InputError):
            PopulationDistribution(**kwargs)

    def test_log_transform_rejects_non_positive_values(self):
        with pytest.raises(DomainError):
            PopulationDistribution.from_value("a", "log", 0.0)

    def test_individual_param(self):
        d = PopulationDistribution("V0", "log10", 1.0, 0.25)
        assert individual_param(d, 0.5) == pytest.approx(10 ** 1.5)


class TestSamplePopulation:
    def test_is_deterministic(self):
        first = sample_population(FRIBERG_POPULATION, 15, seed=42)
        second = sample_population(FRIBERG_POPULATION, 15, seed=42)
        assert [i.params for i in first] == [i.params for i in second]

    def test_seed_changes_draws(self):
        first = sample_population(FRIBERG_POPULATION, 3, seed=1)
        second = sample_population(FRIBERG_POPULATION, 3, seed=2)
        assert first[0].params != second[0].params

    def test_prefix_is_stable_when_population_grows(self):
        small = sample_population(FRIBERG_POPULATION, 5, seed=9)
        large = sample_population(FRIBERG_POPULATION, 50, seed=9)
        assert [i.params for i in small] == [i.params for i in large[:5]]

    def test_ids_and_random_effects(self):
        people = sample_population(FRIBERG_POPULATION, 4, seed=0)
        assert [p.id for p in people] == [1, 2, 3, 4]
        for person in people:
            for d in FRIBERG_POPULATION:
                assert person.params[d.name] == pytest.approx(individual_param(d, person.random_effects[d.name]))

    def test_fixed_effects_equal_typical_value(self):
        dists = [PopulationDistribution.from_value("gamma", "log", 0.16)]
        assert all(p.params["gamma"] == pytest.approx(0.16) for p in sample_population(dists, 10, seed=3))

    def test_sample_moments_match_law(self):
        d = PopulationDistribution("a", "log", 0.5, 0.3)
        psi = [p.random_effects["a"] for p in sample_population([d], 4000, seed=5)]
        assert np.mean(psi) == pytest.approx(0.0, abs=0.03)
        assert np.std(psi) == pytest.approx(0.3, rel=0.05)

    def test_errors(self):
        with pytest.raises(InputError):
            sample_population(FRIBERG_POPULATION, 0, seed=0)
        with pytest.raises(InputError, match="unique"):
            sample_population(FRIBERG_POPULATION[:1] * 2, 3, seed=0)


class TestDesign:
    def test_friberg_design(self):
        design = friberg_design(dose_amount=1.0)
        assert design.horizon == 65.0
        assert len(design.obs_times) == 22
        assert design.obs_times[-1] == 63.0
        assert [d.time for d in design.doses] == [0.0, 21.0, 42.0, 63.0]
        assert design.noise.kind == "none"

    def test_tiv_design(self):
        design = tiv_design()
        assert len(design.obs_times) == 16
        assert design.obs_times[:3] == (0.0, 8.0, 12.0)
        assert design.obs_times[-1] == 64.0
        assert design.noise == NoiseModel("additive_on_log10", 0.1)

    def test_rejects_times_beyond_horizon(self):
        with pytest.raises(InputError):
            StudyDesign(horizon=10.0, obs_times=(0.0, 11.0))

    def test_rejects_repeated_times(self):
        with pytest.raises(InputError):
            StudyDesign(horizon=10.0, obs_times=(1.0, 1.0))

    def test_noise_kinds(self):
        with pytest.raises(InputError):
            NoiseModel("multiplicative", 0.1)
        rng = np.random.default_rng(0)
        obs = np.array([1.0, 2.0])
        np.testing.assert_array_equal(NoiseModel().apply(obs, rng), obs)
        with pytest.raises(InputError):
            NoiseModel("proportional", 0.1).apply(np.array([0.0]), rng)


class TestGenerateSynthetic:
    def test_friberg_trial(self, friberg_model):
        design = friberg_design(dose_amount=1.0, dose_target=friberg_model.dose_target)
        people = sample_population(FRIBERG_POPULATION, 15, seed=1)
        constants = {k: FRIBERG_TYPICAL[k] for k in ("gamma", "k_circ", "Emax")}
        data = generate_synthetic(friberg_model, people, design, seed=2, constants=constants)
        assert len(data) == 15 * 22
        frame = data.to_frame()
        assert (frame["EVID"] == 1).sum() == 15 * 4
        # no noise: the first observation is the baseline N0
        for person in people:
            times, obs = data.observations_for(person.id)
            assert obs[0] == pytest.approx(person.params["N0"], rel=1e-8)
            assert obs.min() < person.params["N0"]

    def test_tiv_trial(self, tiv_model):
        people = sample_population(TIV_POPULATION, 5, seed=4)
        constants = {"c": TIV_TYPICAL["c"], "d_T": TIV_TYPICAL["d_T"]}
        data = generate_synthetic(tiv_model, people, tiv_design(n_individuals=5), seed=5, constants=constants)
        assert len(data) == 5 * 16
        assert data.doses == {}
        assert np.all(np.isfinite(data.observations))

    def test_is_deterministic_and_seed_dependent(self):
        model = ConstantModel()
        people = sample_population([PopulationDistribution("phi", "identity", 1.0, 0.5)], 6, seed=0)
        design = StudyDesign(horizon=3.0, obs_times=(0.0, 1.0, 2.0, 3.0), noise=NoiseModel("additive", 0.2))
        a = generate_synthetic(model, people, design, seed=10)
        b = generate_synthetic(model, people, design, seed=10)
        c = generate_synthetic(model, people, design, seed=11)
        np.testing.assert_array_equal(a.observations, b.observations)
        assert not np.array_equal(a.observations, c.observations)

    def test_missing_parameter(self, tiv_model):
        people = sample_population(TIV_POPULATION, 2, seed=0)
        with pytest.raises(InputError, match="d_T"):
            generate_synthetic(tiv_model, people, tiv_design(), seed=0, constants={"c": 23.0})

    def test_dense_trajectories(self, tiv_model):
        people = sample_population(TIV_POPULATION, 2, seed=0)
        constants = {"c": 23.0, "d_T": 0.01}
        trajectories = simulate_trajectories(tiv_model, people, tiv_design(), constants, n_grid=66)
        assert sorted(trajectories) == [1, 2]
        assert trajectories[1].states.shape == (66, 3)
        assert trajectories[1].times[-1] == 65.0


class TestTrialDataset:
    def test_frame_orders_doses_before_observations(self):
        data = TrialDataset(
            ids=[2, 1, 1], times=[0.0, 3.0, 0.0], observations=[5.0, 4.0, 5.5],
            doses={1: [DoseEvent(0.0, 1.0, 5)]},
        )
        frame = data.to_frame()
        assert frame["ID"].tolist() == [1, 1, 1, 2]
        assert frame["EVID"].tolist() == [1, 0, 0, 0]
        assert np.isnan(frame["Y"].iloc[0])

    def test_from_frame_restores_doses_with_target(self):
        data = TrialDataset(ids=[1], times=[1.0], observations=[2.0], doses={1: [DoseEvent(0.0, 3.0, 0)]})
        restored = TrialDataset.from_frame(data.to_frame(), dose_target=5)
        assert restored.doses_for(1) == [DoseEvent(0.0, 3.0, 5)]
        np.testing.assert_array_equal(restored.observations, [2.0])

    def test_missing_column(self):
        frame = pd.DataFrame({"ID": [1], "TIME": [0.0], "Y": [1.0], "EVID": [0]})
        with pytest.raises(DatasetSchemaError) as excinfo:
            TrialDataset.from_frame(frame)
        assert excinfo.value.column == "AMT"

    @pytest.mark.parametrize(
        "row, column",
        [
            ({"ID": 1, "TIME": 0.0, "Y": 1.0, "AMT": np.nan, "EVID": 2}, "EVID"),
            ({"ID": 1, "TIME": 0.0, "Y": np.nan, "AMT": np.nan, "EVID": 0}, "Y"),
            ({"ID": 1, "TIME": 0.0, "Y": np.nan, "AMT": np.nan, "EVID": 1}, "AMT"),
        ],
    )
    def test_malformed_rows(self, row, column):
        with pytest.raises(DatasetSchemaError) as excinfo:
            TrialDataset.from_frame(pd.DataFrame([row]))
        assert excinfo.value.column == column

    def test_duplicate_observation_is_rejected(self):
        with pytest.raises(InputError):
            TrialDataset(ids=[1, 1], times=[0.0, 0.0], observations=[1.0, 2.0])

    def test_subset(self):
        data = TrialDataset(ids=[1, 2, 3], times=[0.0, 0.0, 0.0], observations=[1.0, 2.0, 3.0])
        part = data.subset([1, 3])
        assert part.individual_ids() == [1, 3]
        assert TrialDataset(ids=[], times=[], observations=[]).is_empty
