from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import integrate
from scipy.stats import norm

from exceptions import InputError
from population import PopulationDistribution

_QUAD_OPTIONS = {"epsabs": 1e-13, "epsrel": 1e-11, "limit": 500}
_TAIL_SDS = 40.0


@dataclass(frozen=True)
class DensitySpec:
    """Normal density of a population law on its transformed scale."""

    location: float
    spread: float
    transform: str = "identity"
    name: str = ""

    def __post_init__(self):
        if not (np.isfinite(self.location) and np.isfinite(self.spread)):
            raise InputError(f"{self.name}: density location and spread must be finite")
        if not self.spread > 0:
            raise InputError(f"{self.name}: density spread must be > 0 (got {self.spread})")

    @classmethod
    def from_distribution(cls, dist: PopulationDistribution) -> "DensitySpec":
        return cls(location=dist.location, spread=dist.spread, transform=dist.transform, name=dist.name)

    def pdf(self, z):
        return norm.pdf(z, loc=self.location, scale=self.spread)

    def linear_pdf(self, theta):
        """Density of the back-transformed law on the linear scale."""
        theta = np.asarray(theta, dtype=float)
        if self.transform == "identity":
            return self.pdf(theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.transform == "log":
                z, jac = np.log(theta), 1.0 / theta
            else:
                z, jac = np.log10(theta), 1.0 / (theta * np.log(10.0))
            out = self.pdf(z) * jac
        return np.where(theta > 0, out, 0.0)

    def to_linear(self, z):
        if self.transform == "log":
            return np.exp(z)
        if self.transform == "log10":
            return np.power(10.0, z)
        return z


def _check_pair(d1: DensitySpec, d2: DensitySpec):
    if d1.transform != d2.transform:
        raise InputError(f"densities on different scales ({d1.transform} vs {d2.transform})")


def crossing_points(d1: DensitySpec, d2: DensitySpec) -> List[float]:
    """Points where the two normal densities are equal, ascending."""
    m1, s1, m2, s2 = d1.location, d1.spread, d2.location, d2.spread
    if s1 == s2:
        return [] if m1 == m2 else [0.5 * (m1 + m2)]
    # log f1 = log f2 is quadratic in z
    a = 1.0 / (2 * s2 * s2) - 1.0 / (2 * s1 * s1)
    b = m1 / (s1 * s1) - m2 / (s2 * s2)
    c = m2 * m2 / (2 * s2 * s2) - m1 * m1 / (2 * s1 * s1) + np.log(s2 / s1)
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    root = np.sqrt(disc)
    return sorted([(-b - root) / (2 * a), (-b + root) / (2 * a)])


def _analytic_overlap(d1: DensitySpec, d2: DensitySpec) -> float:
    if d1.spread == d2.spread:
        if d1.location == d2.location:
            return 1.0
        return float(2.0 * norm.sf(abs(d1.location - d2.location) / (2.0 * d1.spread)))
    narrow, wide = (d1, d2) if d1.spread < d2.spread else (d2, d1)
    crossings = crossing_points(d1, d2)
    if len(crossings) != 2:
        return _quadrature_overlap(d1, d2)
    lo, hi = crossings
    # the narrow density dominates between the crossings, the wide one outside
    inside = norm.cdf(hi, wide.location, wide.spread) - norm.cdf(lo, wide.location, wide.spread)
    outside = norm.cdf(lo, narrow.location, narrow.spread) + norm.sf(hi, narrow.location, narrow.spread)
    return float(np.clip(inside + outside, 0.0, 1.0))


def _integration_range(d1: DensitySpec, d2: DensitySpec) -> Tuple[float, float]:
    lo = min(d1.location - _TAIL_SDS * d1.spread, d2.location - _TAIL_SDS * d2.spread)
    hi = max(d1.location + _TAIL_SDS * d1.spread, d2.location + _TAIL_SDS * d2.spread)
    return lo, hi


def _breakpoints(d1: DensitySpec, d2: DensitySpec) -> List[float]:
    points = [d1.location, d2.location] + crossing_points(d1, d2)
    for d in (d1, d2):
        points += [d.location - 8 * d.spread, d.location + 8 * d.spread]
    return sorted(set(points))


def _piecewise_quad(fun, edges: List[float]) -> float:
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        if b > a:
            total += integrate.quad(fun, a, b, **_QUAD_OPTIONS)[0]
    return total


def _quadrature_overlap(d1: DensitySpec, d2: DensitySpec) -> float:
    lo, hi = _integration_range(d1, d2)
    edges = [lo] + [p for p in _breakpoints(d1, d2) if lo < p < hi] + [hi]
    value = _piecewise_quad(lambda z: min(d1.pdf(z), d2.pdf(z)), edges)
    return float(np.clip(value, 0.0, 1.0))


def overlap_index(d1: DensitySpec, d2: DensitySpec, method: str = "analytic") -> float:
    """
    Integral of min(f1, f2) on the transformed scale.

    method "analytic" uses the crossing points of the two normals and normal CDFs;
    "quadrature" integrates numerically.
    """
    _check_pair(d1, d2)
    if method == "analytic":
        return _analytic_overlap(d1, d2)
    if method == "quadrature":
        return _quadrature_overlap(d1, d2)
    raise InputError(f"unknown overlap method {method!r}")


def total_variation(d1: DensitySpec, d2: DensitySpec) -> float:
    """Half the L1 distance between the two densities, by quadrature."""
    _check_pair(d1, d2)
    lo, hi = _integration_range(d1, d2)
    edges = [lo] + [p for p in _breakpoints(d1, d2) if lo < p < hi] + [hi]
    return float(0.5 * _piecewise_quad(lambda z: abs(d1.pdf(z) - d2.pdf(z)), edges))


def overlap_on_linear_scale(d1: DensitySpec, d2: DensitySpec) -> float:
    """Integral of min(f1, f2) for the back-transformed densities, by quadrature on the linear scale."""
    _check_pair(d1, d2)
    if d1.transform == "identity":
        return _quadrature_overlap(d1, d2)
    lo, hi = _integration_range(d1, d2)
    edges = [lo] + [p for p in _breakpoints(d1, d2) if lo < p < hi] + [hi]
    linear_edges = [float(d1.to_linear(z)) for z in edges]
    value = _piecewise_quad(lambda t: min(float(d1.linear_pdf(t)), float(d2.linear_pdf(t))), linear_edges)
    return float(np.clip(value, 0.0, 1.0))
