import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from exceptions import AllStartsFailedError, InputError, PopIdentError
from ode import IntegratorConfig
from population import TrialDataset
from utils.parallel import parallel_map
from utils.rng import derive_seed, substream
from .likelihood import log_likelihood_is
from .saem import saem_fit
from .statmodel import FitResult, SaemConfig, StatModelSpec

logger = logging.getLogger(__name__)

Bounds = Mapping[str, Tuple[float, float]]


@dataclass
class StartFailure:
    start_index: int
    seed: int
    error: str


@dataclass
class MultiStartResult:
    """Completed fits ranked by ascending AIC (ties by start index) plus the starts that failed."""

    fits: List[FitResult]
    failures: List[StartFailure] = field(default_factory=list)

    @property
    def n_starts(self) -> int:
        return len(self.fits) + len(self.failures)

    @property
    def partial_failure(self) -> bool:
        return bool(self.failures) and bool(self.fits)

    def top(self, k: int) -> List[FitResult]:
        return self.fits[:k]


def start_seed(seed: int, index: int) -> int:
    """Seed of start `index` in a multi-start run rooted at `seed`."""
    return derive_seed(seed, "start", index)


def sample_initial_estimates(
    bounds: Bounds,
    n: int,
    seed: int,
    transforms: Optional[Mapping[str, str]] = None,
) -> List[Dict[str, float]]:
    """
    Draw n initial value vectors, uniform on each interval.

    Parameters whose transform is log or log10 are drawn log-uniformly. A degenerate
    interval [c, c] always yields c.
    """
    if n < 1:
        raise InputError(f"number of initial estimates must be >= 1 (got {n})")
    transforms = transforms or {}
    for name, (lo, hi) in bounds.items():
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise InputError(f"{name}: bounds must be finite")
        if lo > hi:
            raise InputError(f"{name}: inverted interval [{lo}, {hi}]")
        if transforms.get(name, "identity") != "identity" and lo <= 0:
            raise InputError(f"{name}: log-scale bounds must be > 0 (got [{lo}, {hi}])")

    rng = substream(seed, "initial-estimates")
    draws = []
    for _ in range(n):
        row = {}
        for name, (lo, hi) in bounds.items():
            u = rng.uniform()
            if lo == hi:
                row[name] = float(lo)
            elif transforms.get(name, "identity") == "identity":
                row[name] = float(lo + u * (hi - lo))
            else:
                row[name] = float(np.exp(np.log(lo) + u * (np.log(hi) - np.log(lo))))
        draws.append(row)
    return draws


def _run_start(task: Tuple):
    data, spec, init, cfg, index, n_is_samples, integrator = task
    try:
        fit = saem_fit(data, spec, init, cfg, integrator, start_index=index)
        estimate = log_likelihood_is(fit, data, spec, n_is_samples, cfg.seed, integrator)
        fit.with_likelihood(estimate.minus2LL, estimate.mc_se)
        logger.info("start %d: -2LL=%.4f (se %.4f) AIC=%.4f", index, fit.minus2LL, fit.mc_se, fit.aic)
        return fit
    except PopIdentError as e:
        logger.warning("start %d failed: %s", index, e)
        return StartFailure(start_index=index, seed=cfg.seed, error=str(e))


def multi_start(
    data: TrialDataset,
    spec: StatModelSpec,
    bounds: Bounds,
    n_starts: int,
    cfg: Optional[SaemConfig] = None,
    n_is_samples: int = 5000,
    integrator: Optional[IntegratorConfig] = None,
    workers: int = 1,
    initial_estimates: Optional[Sequence[Mapping[str, float]]] = None,
) -> MultiStartResult:
    """
    Fit from n_starts random initial estimates and rank the fits by AIC.

    Start k runs SAEM and importance sampling with seed `start_seed(cfg.seed, k)`.
    Failed starts are recorded and left out of the ranking.
    """
    if n_starts < 1:
        raise InputError(f"n_starts must be >= 1 (got {n_starts})")
    cfg = cfg or SaemConfig()
    unknown = [name for name in bounds if name not in spec.param_names]
    if unknown:
        raise InputError(f"bounds given for unknown parameters: {', '.join(unknown)}")
    if initial_estimates is None:
        transforms = {d.name: d.transform for d in spec.fitted_params}
        initial_estimates = sample_initial_estimates(bounds, n_starts, cfg.seed, transforms)
    elif len(initial_estimates) != n_starts:
        raise InputError(f"expected {n_starts} initial estimates, got {len(initial_estimates)}")

    tasks = [
        (data, spec, dict(init), replace(cfg, seed=start_seed(cfg.seed, index)), index, n_is_samples, integrator)
        for index, init in enumerate(initial_estimates)
    ]
    outcomes = parallel_map(_run_start, tasks, workers)

    fits = [o for o in outcomes if isinstance(o, FitResult)]
    failures = [o for o in outcomes if isinstance(o, StartFailure)]
    if not fits:
        raise AllStartsFailedError(f"all {n_starts} starts failed; first error: {failures[0].error}")
    if failures:
        logger.warning("%d of %d starts failed", len(failures), n_starts)
    fits.sort(key=lambda f: (f.aic, f.start_index))
    return MultiStartResult(fits=fits, failures=failures)
