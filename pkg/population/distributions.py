from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence

import numpy as np

from exceptions import DomainError, InputError
from utils.rng import substream

TRANSFORMS = ("log", "log10", "identity")


@dataclass(frozen=True)
class PopulationDistribution:
    """Normal law on the transformed scale: transform(theta) ~ N(location, spread^2)."""

    name: str
    transform: str
    location: float
    spread: float = 0.0

    def __post_init__(self):
        if self.transform not in TRANSFORMS:
            raise InputError(f"{self.name}: unknown transform {self.transform!r}")
        if not np.isfinite(self.location):
            raise InputError(f"{self.name}: location must be finite")
        if not (np.isfinite(self.spread) and self.spread >= 0):
            raise InputError(f"{self.name}: spread must be finite and >= 0 (got {self.spread})")

    @classmethod
    def from_value(cls, name: str, transform: str, value: float, spread: float = 0.0) -> "PopulationDistribution":
        """Declare the law by its linear-scale typical value."""
        probe = cls(name=name, transform=transform, location=0.0, spread=spread)
        return replace(probe, location=probe.to_transformed(value))

    @property
    def is_random(self) -> bool:
        return self.spread > 0

    @property
    def typical_value(self) -> float:
        return self.to_linear(self.location)

    def to_linear(self, z):
        if self.transform == "log":
            return np.exp(z)
        if self.transform == "log10":
            return np.power(10.0, z)
        return z

    def to_transformed(self, value):
        if self.transform == "identity":
            return value
        if np.any(np.asarray(value) <= 0):
            raise DomainError(f"{self.name}: {self.transform} transform needs positive values (got {value})")
        return np.log(value) if self.transform == "log" else np.log10(value)

    def with_estimates(self, location: float, spread: float) -> "PopulationDistribution":
        return replace(self, location=float(location), spread=float(spread))

    def to_dict(self) -> dict:
        return {"name": self.name, "transform": self.transform, "location": self.location, "spread": self.spread}


@dataclass
class Individual:
    id: int
    params: Dict[str, float]
    random_effects: Dict[str, float] = field(default_factory=dict)


def individual_param(dist: PopulationDistribution, psi: float) -> float:
    """Linear-scale parameter for random effect psi."""
    return float(dist.to_linear(dist.location + psi))


def sample_population(dists: Sequence[PopulationDistribution], n: int, seed: int) -> List[Individual]:
    """Draw n virtual individuals; individual k uses its own substream of `seed`."""
    if n < 1:
        raise InputError(f"population size must be >= 1 (got {n})")
    names = [d.name for d in dists]
    if len(set(names)) != len(names):
        raise InputError("population distributions must have unique names")

    spreads = np.array([d.spread for d in dists])
    individuals = []
    for ind_id in range(1, n + 1):
        rng = substream(seed, "population", ind_id)
        psi = spreads * rng.standard_normal(len(dists))
        individuals.append(
            Individual(
                id=ind_id,
                params={d.name: individual_param(d, p) for d, p in zip(dists, psi)},
                random_effects={d.name: float(p) for d, p in zip(dists, psi)},
            )
        )
    return individuals
