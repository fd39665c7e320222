import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from exceptions import InputError
from nlme import FitResult
from .ks import SampleSet, ks_two_sample
from .overlap import DensitySpec, overlap_index

logger = logging.getLogger(__name__)

# edge rule for grouping fits into local optima
CLUSTER_RULE = "fits i and j are connected when KS p > alpha and overlap > 0.5; clusters are connected components"
CLUSTER_OVERLAP = 0.5


@dataclass
class ParameterComparison:
    """Pairwise comparisons of one parameter across K fits; matrices are K x K and symmetric."""

    name: str
    transform: str
    ks_p: np.ndarray
    ks_D: np.ndarray
    overlap: np.ndarray
    ks_method: str
    clusters: List[List[int]] = field(default_factory=list)

    @property
    def n_fits(self) -> int:
        return self.ks_p.shape[0]

    def pairs(self) -> List[tuple]:
        return list(combinations(range(self.n_fits), 2))

    def significant(self, alpha: float) -> np.ndarray:
        return self.ks_p <= alpha

    def n_significant(self, alpha: float) -> int:
        return sum(1 for i, j in self.pairs() if self.ks_p[i, j] <= alpha)

    def mean_overlap(self) -> float:
        values = [self.overlap[i, j] for i, j in self.pairs()]
        return float(np.mean(values)) if values else float("nan")

    def mean_overlap_within_clusters(self) -> float:
        values = [self.overlap[i, j] for c in self.clusters for i, j in combinations(sorted(c), 2)]
        return float(np.mean(values)) if values else float("nan")

    def min_overlap(self) -> float:
        values = [self.overlap[i, j] for i, j in self.pairs()]
        return float(np.min(values)) if values else float("nan")


@dataclass
class ComparisonReport:
    alpha: float
    fit_labels: List[int]
    minus2LL: np.ndarray
    mc_se: np.ndarray
    parameters: Dict[str, ParameterComparison]
    # parameters estimated without inter-individual variability: per-fit typical values
    fixed_effects: Dict[str, List[float]] = field(default_factory=dict)

    @property
    def n_fits(self) -> int:
        return len(self.fit_labels)

    @property
    def n_pairs(self) -> int:
        return self.n_fits * (self.n_fits - 1) // 2

    @property
    def bonferroni_alpha(self) -> float:
        return self.alpha / max(self.n_pairs, 1)

    def parameter(self, name: str) -> ParameterComparison:
        if name not in self.parameters:
            raise InputError(f"parameter {name!r} is not part of this report")
        return self.parameters[name]

    def summary(self) -> List[Dict[str, object]]:
        rows = []
        for name, comp in self.parameters.items():
            rows.append({
                "parameter": name,
                "n_pairs": self.n_pairs,
                "mean_overlap_all_pairs": comp.mean_overlap(),
                "mean_overlap_within_clusters": comp.mean_overlap_within_clusters(),
                "min_overlap": comp.min_overlap(),
                "n_ks_significant": comp.n_significant(self.alpha),
                "n_ks_significant_bonferroni": comp.n_significant(self.bonferroni_alpha),
                "n_clusters": len(comp.clusters),
                "ks_method": comp.ks_method,
            })
        return rows


def _check_consistent(fits: Sequence[FitResult]):
    reference = fits[0]
    names = [(d.name, d.transform) for d in reference.population]
    ids = reference.individual_ids()
    for fit in fits[1:]:
        if [(d.name, d.transform) for d in fit.population] != names:
            raise InputError(
                f"fit {fit.start_index} estimates different parameters than fit {reference.start_index}"
            )
        if fit.individual_ids() != ids:
            raise InputError(f"fit {fit.start_index} covers different individuals than fit {reference.start_index}")


def _compare_parameter(fits: Sequence[FitResult], name: str, alpha: float) -> ParameterComparison:
    k = len(fits)
    samples = [SampleSet(name, fit.transformed_estimates(name)) for fit in fits]
    densities = [DensitySpec.from_distribution(fit.distribution(name)) for fit in fits]
    ks_p = np.ones((k, k))
    ks_D = np.zeros((k, k))
    overlap = np.ones((k, k))
    methods = set()
    for i, j in combinations(range(k), 2):
        result = ks_two_sample(samples[i], samples[j])
        methods.add(result.method)
        ks_p[i, j] = ks_p[j, i] = result.pvalue
        ks_D[i, j] = ks_D[j, i] = result.statistic
        overlap[i, j] = overlap[j, i] = overlap_index(densities[i], densities[j])
    comp = ParameterComparison(
        name=name,
        transform=densities[0].transform,
        ks_p=ks_p,
        ks_D=ks_D,
        overlap=overlap,
        ks_method="+".join(sorted(methods)) if methods else "exact",
    )
    comp.clusters = _connected_fits(comp, alpha)
    return comp


def _connected_fits(comp: ParameterComparison, alpha: float) -> List[List[int]]:
    adjacency = (comp.ks_p > alpha) & (comp.overlap > CLUSTER_OVERLAP)
    np.fill_diagonal(adjacency, False)
    n_components, labels = connected_components(csr_matrix(adjacency.astype(np.int8)), directed=False)
    groups: Dict[int, List[int]] = {}
    for index, label in enumerate(labels):
        groups.setdefault(int(label), []).append(index)
    return sorted(groups.values(), key=lambda g: g[0])


def pairwise_report(fits: Sequence[FitResult], alpha: float = 0.05) -> ComparisonReport:
    """
    Compare K fits parameter by parameter.

    Parameters with inter-individual variability get K(K-1)/2 KS tests on the individual
    estimates and K(K-1)/2 overlap indices of the population densities. Parameters without
    it are listed with their per-fit typical values.
    """
    if len(fits) < 2:
        raise InputError(f"at least 2 fits are needed for a comparison (got {len(fits)})")
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1) (got {alpha})")
    _check_consistent(fits)

    parameters: Dict[str, ParameterComparison] = {}
    fixed_effects: Dict[str, List[float]] = {}
    for d in fits[0].population:
        random_in = [fit.distribution(d.name).is_random for fit in fits]
        if all(random_in):
            parameters[d.name] = _compare_parameter(fits, d.name, alpha)
        elif not any(random_in):
            fixed_effects[d.name] = [float(fit.distribution(d.name).typical_value) for fit in fits]
        else:
            raise InputError(f"parameter {d.name} has inter-individual variability in some fits only")

    logger.info("compared %d fits over %d parameters", len(fits), len(parameters))
    return ComparisonReport(
        alpha=alpha,
        fit_labels=[fit.start_index for fit in fits],
        minus2LL=np.array([fit.minus2LL for fit in fits], dtype=float),
        mc_se=np.array([fit.mc_se for fit in fits], dtype=float),
        parameters=parameters,
        fixed_effects=fixed_effects,
    )


def cluster_fits(report: ComparisonReport, parameter: str) -> List[List[int]]:
    """Partition of fit positions into connected components of the KS-and-overlap graph."""
    return _connected_fits(report.parameter(parameter), report.alpha)
