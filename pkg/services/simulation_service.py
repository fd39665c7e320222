import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List

import storage
from ode import IntegratorConfig
from population import Individual, TrialDataset, generate_synthetic, sample_population, simulate_trajectories
from run_config import RunConfig
from .manifest import RunManifest

logger = logging.getLogger(__name__)


@dataclass
class SimulationOutcome:
    dataset: TrialDataset
    individuals: List[Individual]
    manifest: RunManifest
    out_dir: Path


class SimulationService:
    """Generate a synthetic trial from the generation section of a run config."""

    def __init__(self, workers: int = 1, n_grid: int = 131):
        self.workers = workers
        self.n_grid = n_grid
        self.integrator = IntegratorConfig.for_simulation()

    def run(self, cfg: RunConfig, out_dir: Path) -> SimulationOutcome:
        """Write data.csv, truth.csv, trajectories.csv and manifest.json under out_dir."""
        generation = cfg.require("generation")
        model = cfg.build_model()
        out_dir = storage.init_output_dir(out_dir)
        manifest = RunManifest.for_run("simulate", cfg, workers=self.workers)

        with manifest.stage("population"):
            individuals = sample_population(generation.population, generation.n_individuals, generation.seed)
        with manifest.stage("observations"):
            dataset = generate_synthetic(
                model, individuals, generation.design, generation.seed,
                generation.constants, self.integrator, self.workers,
            )
        with manifest.stage("trajectories"):
            trajectories = simulate_trajectories(
                model, individuals, generation.design, generation.constants,
                self.n_grid, self.integrator, self.workers,
            )

        storage.save_dataset(dataset, out_dir / "data.csv")
        storage.save_truth(individuals, out_dir / "truth.csv", generation.constants)
        storage.save_trajectories(trajectories, model.state_names, out_dir / "trajectories.csv")
        storage.save_manifest(manifest.to_dict(), out_dir / "manifest.json")
        logger.info("wrote synthetic %s trial to %s", model.name, out_dir)
        return SimulationOutcome(dataset=dataset, individuals=individuals, manifest=manifest, out_dir=out_dir)
