import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from exceptions import DomainError, InputError, IntegrationError
from ode import DoseEvent, IntegratorConfig
from population import TrialDataset
from .error_models import ErrorModel
from .statmodel import StatModelSpec

logger = logging.getLogger(__name__)

# everything a trial parameter vector can trip in the structural model
NUMERICAL_FAILURES = (IntegrationError, DomainError, InputError, ZeroDivisionError, FloatingPointError, OverflowError)

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class IndividualData:
    id: int
    times: np.ndarray
    observations: np.ndarray
    doses: List[DoseEvent]


class PopulationEvaluator:
    """Per-individual predictions and log-densities for one dataset and statistical model."""

    def __init__(self, data: TrialDataset, spec: StatModelSpec, cfg: Optional[IntegratorConfig] = None):
        self.spec = spec
        self.cfg = cfg or IntegratorConfig.for_estimation()
        self.individuals: List[IndividualData] = []
        for ind_id in data.individual_ids():
            times, obs = data.observations_for(ind_id)
            self.individuals.append(IndividualData(ind_id, times, obs, data.doses_for(ind_id)))
        self.n_evaluations = 0

    @property
    def ids(self) -> List[int]:
        return [ind.id for ind in self.individuals]

    @property
    def n_observations(self) -> int:
        return int(sum(len(ind.times) for ind in self.individuals))

    def __len__(self) -> int:
        return len(self.individuals)

    def predict(self, idx: int, phi: np.ndarray) -> np.ndarray:
        """Model predictions for individual `idx` at transformed-scale vector `phi`; raises on numerical failure."""
        ind = self.individuals[idx]
        self.n_evaluations += 1
        with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
            values = self.spec.linear_values(phi)
            pred = self.spec.structural.predict(values, ind.times, ind.doses, self.cfg)
        pred = np.asarray(pred, dtype=float)
        if not np.all(np.isfinite(pred)):
            raise DomainError("non-finite model prediction")
        return pred

    def try_loglik(self, idx: int, phi: np.ndarray, error_model: ErrorModel) -> Tuple[float, Optional[np.ndarray]]:
        """(log p(y_i | phi), predictions), or (-inf, None) when the model cannot be evaluated."""
        try:
            pred = self.predict(idx, phi)
        except NUMERICAL_FAILURES as e:
            logger.debug("individual %s: evaluation failed (%s)", self.individuals[idx].id, e)
            return float("-inf"), None
        ll = error_model.log_likelihood(self.individuals[idx].observations, pred)
        if not np.isfinite(ll):
            return float("-inf"), None
        return ll, pred


def log_prior(z: np.ndarray, mean: np.ndarray, sd: np.ndarray) -> float:
    """log N(z; mean, diag(sd^2)) for the random-effect block."""
    if len(z) == 0:
        return 0.0
    r = (np.asarray(z) - mean) / sd
    return float(-0.5 * np.sum(r * r) - np.sum(np.log(sd)) - 0.5 * len(z) * _LOG_2PI)


def compose(mu: np.ndarray, random_indices: Sequence[int], z: np.ndarray) -> np.ndarray:
    """Full transformed vector: population locations with the random block replaced by z."""
    phi = np.array(mu, dtype=float, copy=True)
    if len(random_indices):
        phi[list(random_indices)] = z
    return phi
