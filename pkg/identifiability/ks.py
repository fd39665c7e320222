"""Two-sample Kolmogorov-Smirnov test with exact lattice-path p-values for small samples."""
from dataclasses import dataclass
from fractions import Fraction
from math import comb, sqrt
from typing import NamedTuple

import numpy as np
from scipy.stats import kstwobign

from exceptions import InputError

# exact p-values while n * m stays at or below this
EXACT_LIMIT = 10_000


@dataclass(frozen=True)
class SampleSet:
    """Individual estimates of one parameter from one fit, on the transformed scale."""

    name: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if len(values) < 2:
            raise InputError(f"{self.name}: a sample needs at least 2 values (got {len(values)})")
        if not np.all(np.isfinite(values)):
            raise InputError(f"{self.name}: sample values must be finite")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


class KsResult(NamedTuple):
    statistic: float
    pvalue: float
    method: str


def ks_statistic_scaled(x: np.ndarray, y: np.ndarray) -> int:
    """max |m * #{x <= t} - n * #{y <= t}| over the pooled sample, an exact integer."""
    x = np.sort(x)
    y = np.sort(y)
    n, m = len(x), len(y)
    pooled = np.concatenate([x, y])
    cx = np.searchsorted(x, pooled, side="right").astype(np.int64)
    cy = np.searchsorted(y, pooled, side="right").astype(np.int64)
    return int(np.max(np.abs(m * cx - n * cy)))


def count_paths_inside(n: int, m: int, dnm: int) -> int:
    """
    Number of monotone lattice paths from (0, 0) to (n, m) whose every point (i, j)
    satisfies |i * m - j * n| < dnm. Uses Python integers, so the count is exact.
    """
    if dnm <= 0:
        return 0
    row = [0] * (m + 1)
    for j in range(m + 1):
        if abs(j * n) >= dnm:
            break
        row[j] = 1
    for i in range(1, n + 1):
        inside = abs(i * m) < dnm
        row[0] = row[0] if inside else 0
        for j in range(1, m + 1):
            if abs(i * m - j * n) < dnm:
                row[j] = row[j] + row[j - 1]
            else:
                row[j] = 0
    return row[m]


def exact_pvalue(n: int, m: int, dnm: int) -> float:
    """P(D >= observed) under random relabelling of the pooled sample."""
    total = comb(n + m, n)
    return float(Fraction(total - count_paths_inside(n, m, dnm), total))


def ks_two_sample(x: SampleSet, y: SampleSet) -> KsResult:
    """Statistic sup |F_x - F_y| and its two-sided p-value (exact when n*m <= EXACT_LIMIT)."""
    if x.name != y.name:
        raise InputError(f"cannot compare samples of different parameters ({x.name} vs {y.name})")
    n, m = len(x), len(y)
    dnm = ks_statistic_scaled(x.values, y.values)
    statistic = dnm / (n * m)
    if n * m <= EXACT_LIMIT:
        return KsResult(statistic, exact_pvalue(n, m, dnm), "exact")
    pvalue = float(kstwobign.sf(statistic * sqrt(n * m / (n + m))))
    return KsResult(statistic, float(np.clip(pvalue, 0.0, 1.0)), "asymptotic")
