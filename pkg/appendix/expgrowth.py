"""
Monte Carlo population likelihood of the exponential growth model.

Replicate i grows as x0 * exp((a_i + b_i) t) with a_i ~ Exp(mean mu_a) and
b_i ~ Exp(mean mu_b); only a_i + b_i reaches the data, which is what makes
(mu_a, mu_b) hard to tell apart from (mu_b, mu_a) at small n.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from exceptions import InputError
from utils.parallel import parallel_map
from utils.rng import substream

logger = logging.getLogger(__name__)

EXPGROWTH_TIMES = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
REPLICATE_COUNTS = (5, 20, 50, 200)
TRUE_MEANS = ((1.0, 0.1), (0.1, 1.0))
DEFAULT_BOX = ((0.01, 2.0), (0.01, 2.0))
MIN_MC = 100


@dataclass
class ExpGrowthDataset:
    y: np.ndarray
    times: np.ndarray = field(default_factory=lambda: np.array(EXPGROWTH_TIMES))
    sigma2: float = 0.025
    x0: float = 1.0
    seed: int = 0
    a: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None

    def __post_init__(self):
        self.y = np.atleast_2d(np.asarray(self.y, dtype=float))
        self.times = np.asarray(self.times, dtype=float)
        if self.y.shape[1] != len(self.times):
            raise InputError(f"y has {self.y.shape[1]} columns for {len(self.times)} time points")
        if not np.all(np.isfinite(self.y)):
            raise InputError("log-observations must be finite")
        if not self.sigma2 > 0:
            raise InputError(f"sigma2 must be > 0 (got {self.sigma2})")
        if not self.x0 > 0:
            raise InputError(f"x0 must be > 0 (got {self.x0})")

    @property
    def n(self) -> int:
        return self.y.shape[0]


@dataclass
class LikelihoodSample:
    mu_a: float
    mu_b: float
    loglik: float
    mc_se: float
    degenerate: bool = False
    rank: int = 0
    top: bool = False


def generate_expgrowth_data(
    n: int,
    mu_a: float = 1.0,
    mu_b: float = 0.1,
    x0: float = 1.0,
    sigma2: float = 0.025,
    seed: int = 0,
    times: Sequence[float] = EXPGROWTH_TIMES,
) -> ExpGrowthDataset:
    """n replicates of log x0 + (a_i + b_i) t_j + N(0, sigma2) noise."""
    if n < 1:
        raise InputError(f"number of replicates must be >= 1 (got {n})")
    if not (mu_a > 0 and mu_b > 0):
        raise InputError(f"exponential means must be > 0 (got {mu_a}, {mu_b})")
    if not sigma2 > 0:
        raise InputError(f"sigma2 must be > 0 (got {sigma2})")
    t = np.asarray(times, dtype=float)
    rng = substream(seed, "expgrowth-data")
    a = rng.exponential(mu_a, size=n)
    b = rng.exponential(mu_b, size=n)
    noise = rng.normal(0.0, math.sqrt(sigma2), size=(n, len(t)))
    y = math.log(x0) + np.outer(a + b, t) + noise
    return ExpGrowthDataset(y=y, times=t, sigma2=sigma2, x0=x0, seed=seed, a=a, b=b)


class CommonDraws:
    """
    Standard exponential pairs per replicate, shared by every evaluated (mu_a, mu_b).

    Each pair (e1, e2) is used together with its mirror (e2, e1), so swapping mu_a and
    mu_b permutes the Monte Carlo sample instead of changing it. n_mc must therefore be even.
    """

    def __init__(self, n_replicates: int, n_mc: int, seed: int):
        if n_mc < MIN_MC:
            raise InputError(f"n_mc must be >= {MIN_MC} (got {n_mc})")
        if n_mc % 2:
            raise InputError(f"n_mc must be even, draws come in mirrored pairs (got {n_mc})")
        n_pairs = n_mc // 2
        self.n_samples = n_mc
        draws = np.empty((n_replicates, n_pairs, 2))
        for i in range(n_replicates):
            draws[i] = substream(seed, "mc", i).standard_exponential((n_pairs, 2))
        self.first = np.concatenate([draws[:, :, 0], draws[:, :, 1]], axis=1)
        self.second = np.concatenate([draws[:, :, 1], draws[:, :, 0]], axis=1)


def _data_moments(data: ExpGrowthDataset) -> Tuple[np.ndarray, np.ndarray, float]:
    centred = data.y - math.log(data.x0)
    A = np.sum(centred * centred, axis=1)
    B = centred @ data.times
    T2 = float(data.times @ data.times)
    return A, B, T2


def _loglik(data: ExpGrowthDataset, moments, draws: CommonDraws, mu_a: float, mu_b: float) -> LikelihoodSample:
    if not (mu_a > 0 and mu_b > 0):
        raise InputError(f"exponential means must be > 0 (got {mu_a}, {mu_b})")
    A, B, T2 = moments
    rate = mu_a * draws.first + mu_b * draws.second
    # sum_j (y_ij - log x0 - s t_j)^2 = A_i - 2 s B_i + s^2 T2
    rss = A[:, None] - 2.0 * rate * B[:, None] + rate * rate * T2
    terms = np.sort(-rss / (2.0 * data.sigma2), axis=1)
    log_p = logsumexp(terms, axis=1) - math.log(draws.n_samples)

    degenerate = not np.all(np.isfinite(log_p))
    if degenerate:
        logger.warning("Monte Carlo integrand vanished for %d replicate(s)", int(np.sum(~np.isfinite(log_p))))
        return LikelihoodSample(mu_a, mu_b, float("-inf"), float("nan"), degenerate=True)

    w = np.exp(terms - terms[:, -1:])
    mean_w = w.mean(axis=1)
    rel_var = w.var(axis=1, ddof=1) / (draws.n_samples * mean_w * mean_w)
    return LikelihoodSample(mu_a, mu_b, float(np.sum(log_p)), float(np.sqrt(np.sum(rel_var))))


def mc_loglik(data: ExpGrowthDataset, mu_a: float, mu_b: float, n_mc: int = 10_000, seed: int = 0) -> LikelihoodSample:
    """
    Population log-likelihood sum_i log P(y_i | mu_a, mu_b), without the constant term.

    Each replicate's integral over (a_i, b_i) is a Monte Carlo average over prior draws,
    evaluated in log-sum-exp form. mc_se is the delta-method standard error.
    """
    draws = CommonDraws(data.n, n_mc, seed)
    return _loglik(data, _data_moments(data), draws, mu_a, mu_b)


def _evaluate_chunk(task) -> List[LikelihoodSample]:
    data, draws, points = task
    moments = _data_moments(data)
    return [_loglik(data, moments, draws, mu_a, mu_b) for mu_a, mu_b in points]


def landscape_points(
    sampler: str = "uniform",
    n_points: int = 800,
    seed: int = 0,
    box: Tuple[Tuple[float, float], Tuple[float, float]] = DEFAULT_BOX,
    grid: Optional[Sequence[Tuple[float, float]]] = None,
) -> List[Tuple[float, float]]:
    if sampler == "grid":
        if not grid:
            raise InputError("grid sampler needs explicit points")
        points = [(float(a), float(b)) for a, b in grid]
    elif sampler == "uniform":
        (a_lo, a_hi), (b_lo, b_hi) = box
        if not (0 < a_lo <= a_hi and 0 < b_lo <= b_hi):
            raise InputError(f"landscape box must lie in (0, inf)^2 (got {box})")
        if n_points < 1:
            raise InputError(f"n_points must be >= 1 (got {n_points})")
        rng = substream(seed, "landscape-points")
        u = rng.uniform(size=(n_points, 2))
        points = [(a_lo + ua * (a_hi - a_lo), b_lo + ub * (b_hi - b_lo)) for ua, ub in u]
    else:
        raise InputError(f"unknown sampler {sampler!r}; expected 'uniform' or 'grid'")
    if any(not (a > 0 and b > 0) for a, b in points):
        raise InputError("landscape points must have positive coordinates")
    return points


def likelihood_landscape(
    data: ExpGrowthDataset,
    sampler: str = "uniform",
    n_points: int = 800,
    n_mc: int = 10_000,
    seed: int = 0,
    box: Tuple[Tuple[float, float], Tuple[float, float]] = DEFAULT_BOX,
    grid: Optional[Sequence[Tuple[float, float]]] = None,
    top_fraction: float = 0.05,
    workers: int = 1,
) -> List[LikelihoodSample]:
    """
    Evaluate mc_loglik at every landscape point with the same Monte Carlo draws.

    Samples come back in point order with `rank` (1 = highest log-likelihood, ties by
    position) and `top` set for the best ceil(top_fraction * n) points.
    """
    if not 0 < top_fraction <= 1:
        raise InputError(f"top_fraction must lie in (0, 1] (got {top_fraction})")
    points = landscape_points(sampler, n_points, seed, box, grid)
    draws = CommonDraws(data.n, n_mc, seed)

    n_chunks = max(1, min(workers, len(points)))
    chunks = [points[k::n_chunks] for k in range(n_chunks)]
    results = parallel_map(_evaluate_chunk, [(data, draws, chunk) for chunk in chunks], workers)
    samples: List[Optional[LikelihoodSample]] = [None] * len(points)
    for k, chunk_result in enumerate(results):
        for offset, sample in enumerate(chunk_result):
            samples[k + offset * n_chunks] = sample

    order = sorted(range(len(samples)), key=lambda idx: (-samples[idx].loglik, idx))
    n_top = math.ceil(top_fraction * len(samples))
    for rank, idx in enumerate(order, start=1):
        samples[idx].rank = rank
        samples[idx].top = rank <= n_top
    logger.info("evaluated %d landscape points for n=%d replicates", len(samples), data.n)
    return samples


def top_region_diameter(samples: Sequence[LikelihoodSample]) -> float:
    """Largest Euclidean distance between two top-flagged samples."""
    pts = np.array([(s.mu_a, s.mu_b) for s in samples if s.top])
    if len(pts) < 2:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=2)).max())


def distance_to_truth(sample: LikelihoodSample, truths: Sequence[Tuple[float, float]] = TRUE_MEANS) -> float:
    return float(min(math.hypot(sample.mu_a - a, sample.mu_b - b) for a, b in truths))


def landscape_summary(samples: Sequence[LikelihoodSample], truths: Sequence[Tuple[float, float]] = TRUE_MEANS) -> Dict[str, float]:
    top = [s for s in samples if s.top]
    return {
        "n_points": len(samples),
        "n_top": len(top),
        "top_region_diameter": top_region_diameter(samples),
        "max_top_distance_to_truth": max((distance_to_truth(s, truths) for s in top), default=float("nan")),
    }
