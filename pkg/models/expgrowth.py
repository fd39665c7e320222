"""Exponential growth x' = (a + b) x, solved in closed form."""
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from exceptions import DomainError, InputError
from ode import DoseEvent, IntegratorConfig, Trajectory
from .base import ModelSpec

PARAM_NAMES = ("a", "b", "x0")


@dataclass(frozen=True)
class ExpGrowthParams:
    a: float
    b: float
    x0: float

    def __post_init__(self):
        if not (self.a >= 0 and self.b >= 0):
            raise DomainError(f"growth rates must be >= 0 (got a={self.a}, b={self.b})")
        if not self.x0 > 0:
            raise DomainError(f"x0 must be > 0 (got {self.x0})")

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "ExpGrowthParams":
        return cls(a=float(values["a"]), b=float(values["b"]), x0=float(values["x0"]))


def expgrowth_solution(params: ExpGrowthParams, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """x0 * exp((a + b) t); only the sum a + b is visible in the output."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InputError("expgrowth_solution requires t >= 0")
    value = params.x0 * np.exp((params.a + params.b) * t_arr)
    return float(value) if np.ndim(value) == 0 else value


class ExpGrowthModel(ModelSpec):
    name = "expgrowth"
    state_names = ("x",)
    param_names = PARAM_NAMES
    observation_scale = "log"

    def bind(self, values: Any) -> ExpGrowthParams:
        if isinstance(values, ExpGrowthParams):
            return values
        self.require(values)
        return ExpGrowthParams.from_mapping(values)

    def rhs(self, t: float, y: np.ndarray, bound: ExpGrowthParams) -> np.ndarray:
        return (bound.a + bound.b) * y

    def initial_state(self, bound: ExpGrowthParams) -> np.ndarray:
        return np.array([bound.x0])

    def observe(self, states: np.ndarray, bound: ExpGrowthParams) -> np.ndarray:
        return np.log(np.asarray(states)[:, 0])

    def simulate(
        self,
        values: Any,
        obs_times: Sequence[float],
        doses: Sequence[DoseEvent] = (),
        cfg: Optional[IntegratorConfig] = None,
        horizon: Optional[float] = None,
    ) -> Trajectory:
        if doses:
            raise InputError("the exponential growth model takes no doses")
        bound = self.bind(values)
        times = np.asarray(obs_times, dtype=float)
        states = np.asarray(expgrowth_solution(bound, times), dtype=float).reshape(-1, 1)
        return Trajectory(times=times, states=states, observations=self.observe(states, bound))


class ConstantModel(ModelSpec):
    """f(t, phi) = phi at every time; the simplest hierarchical model with a closed-form likelihood."""

    name = "constant"
    state_names = ("x",)
    param_names = ("phi",)

    def bind(self, values: Any) -> float:
        if isinstance(values, float):
            return values
        self.require(values)
        return float(values["phi"])

    def rhs(self, t: float, y: np.ndarray, bound: float) -> np.ndarray:
        return np.zeros_like(y)

    def initial_state(self, bound: float) -> np.ndarray:
        return np.array([bound])

    def observe(self, states: np.ndarray, bound: float) -> np.ndarray:
        return np.asarray(states)[:, 0]

    def simulate(
        self,
        values: Any,
        obs_times: Sequence[float],
        doses: Sequence[DoseEvent] = (),
        cfg: Optional[IntegratorConfig] = None,
        horizon: Optional[float] = None,
    ) -> Trajectory:
        bound = self.bind(values)
        times = np.asarray(obs_times, dtype=float)
        states = np.full((len(times), 1), bound)
        return Trajectory(times=times, states=states, observations=states[:, 0].copy())
