import numpy as np
import pytest

from models import PLACEHOLDER_PK, FribergModel, TivModel
from nlme import ErrorModel, FitResult
from population import PopulationDistribution, TrialDataset

FRIBERG_TYPICAL = {
    "N0": 5.03, "EC50": 0.14, "k_tr": 1.08, "k_prol": 0.87,
    "gamma": 0.16, "k_circ": 1.15, "Emax": 1.0,
}

TIV_TYPICAL = {
    "beta": 8e-7, "p": 3500.0, "delta": 0.25, "T0": 1.5e6, "V0": 10.0,
    "c": 23.0, "d_T": 0.01,
}


@pytest.fixture
def friberg_model():
    return FribergModel(pk=PLACEHOLDER_PK)


@pytest.fixture
def tiv_model():
    return TivModel()


def constant_dataset(n_individuals=6, n_obs=4, mu=1.0, omega=0.5, a=0.3, seed=0):
    """y_ij = phi_i + eps_ij with phi_i ~ N(mu, omega^2), eps ~ N(0, a^2)."""
    rng = np.random.default_rng(seed)
    phi = mu + omega * rng.standard_normal(n_individuals)
    ids, times, obs = [], [], []
    for k in range(n_individuals):
        for j in range(n_obs):
            ids.append(k + 1)
            times.append(float(j))
            obs.append(phi[k] + a * rng.standard_normal())
    return TrialDataset(ids=ids, times=times, observations=obs)


def make_fit(locations, spreads, start_index=0, minus2LL=100.0, mc_se=0.1, n_individuals=12, seed=0, transform="log"):
    """A FitResult with individual estimates drawn from its own population law."""
    rng = np.random.default_rng(seed)
    population = [
        PopulationDistribution(name, transform, float(locations[name]), float(spreads[name]))
        for name in sorted(locations)
    ]
    estimates, effects = {}, {}
    for ind_id in range(1, n_individuals + 1):
        estimates[ind_id], effects[ind_id] = {}, {}
        for d in population:
            eta = d.spread * rng.standard_normal()
            estimates[ind_id][d.name] = float(d.to_linear(d.location + eta))
            if d.is_random:
                effects[ind_id][d.name] = float(eta)
    fit = FitResult(
        population=population,
        error_model=ErrorModel("proportional", 0.1),
        individual_estimates=estimates,
        random_effects=effects,
        n_estimated=2 * len(population) + 1,
        seed=seed,
        start_index=start_index,
    )
    return fit.with_likelihood(minus2LL, mc_se)
