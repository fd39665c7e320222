import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List

import pandas as pd

import storage
from appendix import LikelihoodSample, generate_expgrowth_data, landscape_summary, likelihood_landscape
from run_config import RunConfig
from utils.plots import plot_landscape
from utils.rng import derive_seed
from .manifest import RunManifest

logger = logging.getLogger(__name__)


@dataclass
class AppendixOutcome:
    landscapes: Dict[int, List[LikelihoodSample]]
    summaries: Dict[int, Dict[str, float]]
    manifest: RunManifest
    out_dir: Path


def replicate_seed(seed: int, n: int) -> int:
    """Seed of the landscape for n replicates."""
    return derive_seed(seed, "replicates", n)


class AppendixService:
    """Likelihood landscapes of the exponential growth model, one per replicate count."""

    def __init__(self, workers: int = 1, render: bool = True):
        self.workers = workers
        self.render = render

    def run(self, cfg: RunConfig, out_dir: Path) -> AppendixOutcome:
        settings = cfg.require("appendix")
        out_dir = storage.init_output_dir(out_dir)
        manifest = RunManifest.for_run("appendix", cfg, workers=self.workers)
        truths = ((settings.mu_a, settings.mu_b), (settings.mu_b, settings.mu_a))

        landscapes: Dict[int, List[LikelihoodSample]] = {}
        summaries: Dict[int, Dict[str, float]] = {}
        for n in settings.replicates:
            seed = replicate_seed(settings.seed, n)
            n_dir = storage.init_output_dir(out_dir / f"n_{n}")
            with manifest.stage(f"n={n}"):
                data = generate_expgrowth_data(n, settings.mu_a, settings.mu_b, settings.x0, settings.sigma2, seed)
                samples = likelihood_landscape(
                    data,
                    n_points=settings.n_points,
                    n_mc=settings.n_mc,
                    seed=seed,
                    box=settings.box,
                    top_fraction=settings.top_fraction,
                    workers=self.workers,
                )
            storage.save_expgrowth_data(data, n_dir / "data.csv")
            landscape_path = storage.save_landscape(samples, n_dir / "landscape.csv")
            if self.render:
                plot_landscape(storage.load_landscape(landscape_path), truths, f"n = {n}", n_dir / "landscape.svg")
            landscapes[n] = samples
            summaries[n] = landscape_summary(samples, truths)
            logger.info("n=%d: top-region diameter %.3f", n, summaries[n]["top_region_diameter"])

        summary = pd.DataFrame([{"n": n, **s} for n, s in sorted(summaries.items())])
        storage.save_table(summary, out_dir / "summary.csv")
        storage.save_manifest(manifest.to_dict(), out_dir / "manifest.json")
        return AppendixOutcome(landscapes=landscapes, summaries=summaries, manifest=manifest, out_dir=out_dir)
