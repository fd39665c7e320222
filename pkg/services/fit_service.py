import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import storage
from config import Config
from exceptions import InputError
from nlme import MultiStartResult, fit_predictions, multi_start
from ode import IntegratorConfig
from run_config import RunConfig
from .manifest import RunManifest

logger = logging.getLogger(__name__)


@dataclass
class FitOutcome:
    result: MultiStartResult
    top_k: int
    manifest: RunManifest
    out_dir: Path


class FitService:
    """Multi-start SAEM fits of a dataset, ranked by AIC and written one directory per start."""

    def __init__(self, workers: int = 1, n_grid: int = 101):
        self.workers = workers
        self.n_grid = n_grid
        self.integrator = IntegratorConfig.for_estimation()

    def run(
        self,
        cfg: RunConfig,
        data_path: Path,
        out_dir: Path,
        n_starts: Optional[int] = None,
        top_k: Optional[int] = None,
    ) -> FitOutcome:
        """Fit, then write fit_NNNN/ directories, summary.csv, best.json and manifest.json."""
        fitting = cfg.require("fitting")
        spec = cfg.stat_model_spec()
        n_starts = n_starts or fitting.n_starts
        top_k = top_k or cfg.analysis.top_k or Config.DEFAULT_TOP_K

        data = storage.load_dataset(data_path, dose_target=spec.structural.dose_target or 0)
        if data.is_empty:
            raise InputError(f"{data_path} has no observations")
        out_dir = storage.init_output_dir(out_dir)
        manifest = RunManifest.for_run(
            "fit", cfg, data=str(data_path), n_starts=n_starts, top_k=top_k, workers=self.workers
        )

        with manifest.stage("multi_start"):
            result = multi_start(
                data, spec, fitting.bounds, n_starts, fitting.saem,
                fitting.n_is_samples, self.integrator, self.workers,
            )
        with manifest.stage("predictions"):
            for fit in result.fits:
                predictions = fit_predictions(fit, data, spec, self.n_grid, IntegratorConfig.for_simulation())
                storage.save_fit(fit, out_dir / storage.fit_dir_name(fit), predictions)

        storage.save_fit_summary(result.fits, out_dir / "summary.csv")
        storage.save_best(result.fits, top_k, out_dir / "best.json")
        if result.failures:
            storage.save_failures(result.failures, out_dir / "failures.json")
        storage.save_manifest(manifest.to_dict(), out_dir / "manifest.json")
        logger.info("%d fits written to %s (best AIC %.4f)", len(result.fits), out_dir, result.fits[0].aic)
        return FitOutcome(result=result, top_k=top_k, manifest=manifest, out_dir=out_dir)
