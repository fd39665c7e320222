from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from exceptions import InputError
from ode import DoseEvent

NOISE_KINDS = ("none", "additive", "additive_on_log10", "proportional")


@dataclass(frozen=True)
class NoiseModel:
    """Observation noise added to synthetic data."""

    kind: str = "none"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InputError(f"unknown noise kind {self.kind!r}")
        if not self.value >= 0:
            raise InputError(f"noise parameter must be >= 0 (got {self.value})")

    def apply(self, observations: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        obs = np.asarray(observations, dtype=float)
        if self.kind == "none":
            return obs.copy()
        eps = rng.standard_normal(len(obs))
        if self.kind == "proportional":
            if np.any(obs <= 0):
                raise InputError("proportional noise needs strictly positive simulated observations")
            return obs + self.value * obs * eps
        # additive_on_log10 expects an observation map that already returns log10 values
        return obs + self.value * eps

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class StudyDesign:
    horizon: float
    obs_times: Tuple[float, ...]
    doses: Tuple[DoseEvent, ...] = ()
    noise: NoiseModel = field(default_factory=NoiseModel)
    n_individuals: int = 15

    def __post_init__(self):
        times = np.asarray(self.obs_times, dtype=float)
        if len(times) and (times.min() < 0 or times.max() > self.horizon):
            raise InputError(f"observation times must lie in [0, {self.horizon}]")
        if np.any(np.diff(times) <= 0):
            raise InputError("observation times must be strictly increasing")
        if self.n_individuals < 1:
            raise InputError(f"n_individuals must be >= 1 (got {self.n_individuals})")
        dose_times = [d.time for d in self.doses]
        if dose_times != sorted(dose_times):
            raise InputError("doses must be sorted by time")

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "obs_times": list(self.obs_times),
            "doses": [{"time": d.time, "amount": d.amount, "target": d.target} for d in self.doses],
            "noise": self.noise.to_dict(),
            "n_individuals": self.n_individuals,
        }


def friberg_design(dose_amount: float, dose_target: int = 5, n_individuals: int = 15,
                   dose_days: Sequence[float] = (0.0, 21.0, 42.0, 63.0)) -> StudyDesign:
    """65 days, doses every 21 days, neutrophils every 3 days from 0 to 63, no noise."""
    return StudyDesign(
        horizon=65.0,
        obs_times=tuple(float(t) for t in range(0, 64, 3)),
        doses=tuple(DoseEvent(time=float(t), amount=dose_amount, target=dose_target) for t in dose_days),
        noise=NoiseModel("none"),
        n_individuals=n_individuals,
    )


def tiv_design(n_individuals: int = 15, noise_sd: float = 0.1) -> StudyDesign:
    """65 days, log10 viral load on day 0 and every 4 days from 8 to 64, sd 0.1 log10."""
    return StudyDesign(
        horizon=65.0,
        obs_times=(0.0,) + tuple(float(t) for t in range(8, 65, 4)),
        doses=(),
        noise=NoiseModel("additive_on_log10", noise_sd),
        n_individuals=n_individuals,
    )
