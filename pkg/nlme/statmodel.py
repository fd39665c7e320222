from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from exceptions import InputError
from models import ModelSpec
from population import PopulationDistribution
from .error_models import ErrorModel


@dataclass
class StatModelSpec:
    """Structural model plus the population laws, constants and residual law to estimate."""

    structural: ModelSpec
    fitted_params: List[PopulationDistribution]
    error_model: ErrorModel
    fixed_constants: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        names = [d.name for d in self.fitted_params]
        if not names:
            raise InputError("at least one parameter must be estimated")
        if len(set(names)) != len(names):
            raise InputError("fitted parameter names must be unique")
        overlap = set(names) & set(self.fixed_constants)
        if overlap:
            raise InputError(f"parameters both fitted and fixed: {', '.join(sorted(overlap))}")
        declared = set(names) | set(self.fixed_constants)
        expected = set(self.structural.param_names)
        if declared != expected:
            missing = sorted(expected - declared)
            extra = sorted(declared - expected)
            parts = []
            if missing:
                parts.append(f"missing {', '.join(missing)}")
            if extra:
                parts.append(f"unknown {', '.join(extra)}")
            raise InputError(f"parameters for model {self.structural.name} do not match: {'; '.join(parts)}")

    @property
    def param_names(self) -> List[str]:
        return [d.name for d in self.fitted_params]

    @property
    def random_indices(self) -> List[int]:
        return [k for k, d in enumerate(self.fitted_params) if d.is_random]

    @property
    def fixed_effect_indices(self) -> List[int]:
        return [k for k, d in enumerate(self.fitted_params) if not d.is_random]

    @property
    def random_names(self) -> List[str]:
        return [self.fitted_params[k].name for k in self.random_indices]

    @property
    def fixed_effect_names(self) -> List[str]:
        return [self.fitted_params[k].name for k in self.fixed_effect_indices]

    @property
    def n_estimated(self) -> int:
        """Locations of every fitted parameter, spreads of the random ones, and the error parameter."""
        return len(self.fitted_params) + len(self.random_indices) + 1

    def distribution(self, name: str) -> PopulationDistribution:
        for d in self.fitted_params:
            if d.name == name:
                return d
        raise KeyError(name)

    def linear_values(self, phi: np.ndarray) -> Dict[str, float]:
        """Structural parameter mapping for a transformed-scale vector in `fitted_params` order."""
        values = dict(self.fixed_constants)
        for d, z in zip(self.fitted_params, phi):
            values[d.name] = float(d.to_linear(z))
        return values


@dataclass(frozen=True)
class SaemConfig:
    n_burnin: int = 300
    n_smoothing: int = 200
    mcmc_steps: int = 5
    step_size_exponent: float = 0.7
    seed: int = 0
    annealing: float = 0.95
    min_spread: float = 1e-4
    min_error: float = 1e-6
    mode_max_iter: int = 400

    def __post_init__(self):
        if self.n_burnin < 1 or self.n_smoothing < 1 or self.mcmc_steps < 1:
            raise InputError("SAEM iteration and MCMC step counts must be >= 1")
        if not 0.5 < self.step_size_exponent <= 1.0:
            raise InputError(f"step_size_exponent must lie in (0.5, 1] (got {self.step_size_exponent})")
        if not 0 < self.annealing <= 1:
            raise InputError(f"annealing factor must lie in (0, 1] (got {self.annealing})")
        if self.seed < 0:
            raise InputError("seed must be non-negative")

    @property
    def n_iterations(self) -> int:
        return self.n_burnin + self.n_smoothing

    def step_size(self, k: int) -> float:
        """gamma_k for 1-based iteration k: 1 during burn-in, then (k - n_burnin)^-exponent."""
        if k <= self.n_burnin:
            return 1.0
        return float((k - self.n_burnin) ** (-self.step_size_exponent))

    def to_dict(self) -> dict:
        return {
            "n_burnin": self.n_burnin,
            "n_smoothing": self.n_smoothing,
            "mcmc_steps": self.mcmc_steps,
            "step_size_exponent": self.step_size_exponent,
            "seed": self.seed,
            "annealing": self.annealing,
            "min_spread": self.min_spread,
            "min_error": self.min_error,
            "mode_max_iter": self.mode_max_iter,
        }


@dataclass
class FitResult:
    population: List[PopulationDistribution]
    error_model: ErrorModel
    individual_estimates: Dict[int, Dict[str, float]]
    random_effects: Dict[int, Dict[str, float]]
    n_estimated: int
    seed: int
    start_index: int = 0
    minus2LL: float = float("nan")
    mc_se: float = float("nan")
    aic: float = float("nan")
    trace: List[Dict[str, float]] = field(default_factory=list)
    n_numerical_rejections: int = 0
    init: Dict[str, float] = field(default_factory=dict)

    @property
    def error_params(self) -> List[float]:
        return [self.error_model.value]

    @property
    def param_names(self) -> List[str]:
        return [d.name for d in self.population]

    def distribution(self, name: str) -> PopulationDistribution:
        for d in self.population:
            if d.name == name:
                return d
        raise KeyError(name)

    def individual_ids(self) -> List[int]:
        return sorted(self.individual_estimates)

    def transformed_estimates(self, name: str) -> np.ndarray:
        """Individual estimates of one parameter on its transformed scale, ordered by id."""
        dist = self.distribution(name)
        return np.array([dist.to_transformed(self.individual_estimates[i][name]) for i in self.individual_ids()])

    def with_likelihood(self, minus2LL: float, mc_se: float) -> "FitResult":
        self.minus2LL = float(minus2LL)
        self.mc_se = float(mc_se)
        self.aic = aic(self.minus2LL, self.n_estimated)
        return self

    def summary(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {
            "start_index": self.start_index,
            "seed": self.seed,
            "minus2LL": self.minus2LL,
            "mc_se": self.mc_se,
            "aic": self.aic,
            "n_estimated": self.n_estimated,
        }
        for d in self.population:
            row[f"{d.name}_location"] = d.location
            row[f"{d.name}_spread"] = d.spread
        row[self.error_model.param_name] = self.error_model.value
        return row


def aic(minus2LL: float, n_estimated: int) -> float:
    """Akaike information criterion from -2 log-likelihood."""
    if n_estimated < 1:
        raise InputError(f"n_estimated must be >= 1 (got {n_estimated})")
    return float(minus2LL) + 2.0 * n_estimated


def initial_population(spec: StatModelSpec, init: Optional[Mapping[str, float]] = None) -> List[PopulationDistribution]:
    """Population laws at the start of a fit: `init` gives linear typical values, spreads come from `spec`."""
    init = init or {}
    unknown = sorted(set(init) - set(spec.param_names))
    if unknown:
        raise InputError(f"initial values for unknown parameters: {', '.join(unknown)}")
    out = []
    for d in spec.fitted_params:
        if d.name in init:
            out.append(d.with_estimates(d.to_transformed(float(init[d.name])), d.spread))
        else:
            out.append(d)
    return out
