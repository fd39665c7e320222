import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from exceptions import DomainError, IntegrationError, SimulationError
from models import ModelSpec
from ode import IntegratorConfig, Trajectory
from utils.parallel import parallel_map
from utils.rng import substream
from .dataset import TrialDataset
from .design import StudyDesign
from .distributions import Individual

logger = logging.getLogger(__name__)


def _individual_values(ind: Individual, constants: Optional[Mapping[str, float]]) -> Dict[str, float]:
    values = dict(constants or {})
    values.update(ind.params)
    return values


def _simulate_one(task: Tuple) -> Trajectory:
    model, ind, constants, obs_times, design, cfg = task
    try:
        return model.simulate(
            _individual_values(ind, constants), obs_times, design.doses, cfg, horizon=design.horizon
        )
    except (IntegrationError, DomainError) as e:
        raise SimulationError(ind.id, str(e)) from e


def generate_synthetic(
    model: ModelSpec,
    individuals: Sequence[Individual],
    design: StudyDesign,
    seed: int,
    constants: Optional[Mapping[str, float]] = None,
    cfg: Optional[IntegratorConfig] = None,
    workers: int = 1,
) -> TrialDataset:
    """
    Simulate every individual over the design and sample noisy observations.

    Args:
        model: Structural model.
        individuals: Virtual population; `params` plus `constants` must cover the model.
        design: Observation times, doses and noise law.
        seed: Noise seed; individual k draws from substream (seed, "noise", k).
        constants: Parameters shared by everyone (e.g. c and d_T for TIV).
        cfg: Integrator tolerances, simulation defaults when omitted.
        workers: Worker processes for the per-individual integrations.

    Returns:
        TrialDataset with one row per (individual, observation time).
    """
    cfg = cfg or IntegratorConfig.for_simulation()
    for ind in individuals:
        model.require(_individual_values(ind, constants))

    tasks = [(model, ind, constants, design.obs_times, design, cfg) for ind in individuals]
    trajectories = parallel_map(_simulate_one, tasks, workers)

    ids: List[np.ndarray] = []
    times: List[np.ndarray] = []
    observations: List[np.ndarray] = []
    doses = {}
    for ind, traj in zip(individuals, trajectories):
        if not np.all(np.isfinite(traj.observations)):
            raise SimulationError(ind.id, "simulated observations are not finite")
        noisy = design.noise.apply(traj.observations, substream(seed, "noise", ind.id))
        ids.append(np.full(len(traj.times), ind.id, dtype=np.int64))
        times.append(traj.times)
        observations.append(noisy)
        if design.doses:
            doses[ind.id] = list(design.doses)

    logger.info("generated synthetic data for %d individuals (%s, noise=%s)",
                len(individuals), model.name, design.noise.kind)
    return TrialDataset(
        ids=np.concatenate(ids) if ids else np.empty(0, dtype=np.int64),
        times=np.concatenate(times) if times else np.empty(0),
        observations=np.concatenate(observations) if observations else np.empty(0),
        doses=doses,
        meta={"seed": seed, "model": model.name, "design": design.to_dict()},
    )


def simulate_trajectories(
    model: ModelSpec,
    individuals: Sequence[Individual],
    design: StudyDesign,
    constants: Optional[Mapping[str, float]] = None,
    n_grid: int = 131,
    cfg: Optional[IntegratorConfig] = None,
    workers: int = 1,
) -> Dict[int, Trajectory]:
    """Noiseless trajectories on a dense grid over [0, horizon], keyed by individual id."""
    cfg = cfg or IntegratorConfig.for_simulation()
    grid = tuple(np.linspace(0.0, design.horizon, n_grid).tolist())
    tasks = [(model, ind, constants, grid, design, cfg) for ind in individuals]
    trajectories = parallel_map(_simulate_one, tasks, workers)
    return {ind.id: traj for ind, traj in zip(individuals, trajectories)}
