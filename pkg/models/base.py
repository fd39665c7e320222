from abc import ABC, abstractmethod
from typing import Any, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from exceptions import InputError
from ode import DoseEvent, IntegratorConfig, Trajectory, integrate


class ModelSpec(ABC):
    """An ODE system with its observation map, parameter layout and dose semantics."""

    name: str = ""
    state_names: Tuple[str, ...] = ()
    param_names: Tuple[str, ...] = ()
    # scale of `observe` output: "linear", "log" or "log10"
    observation_scale: str = "linear"
    dose_target: Optional[int] = None

    @abstractmethod
    def bind(self, values: Any) -> Any:
        """Turn a name -> value mapping into the typed parameter object used by `rhs`."""

    @abstractmethod
    def rhs(self, t: float, y: np.ndarray, bound: Any) -> np.ndarray:
        """Time derivative of the full state vector."""

    @abstractmethod
    def initial_state(self, bound: Any) -> np.ndarray:
        """State at t = 0 before any dose."""

    @abstractmethod
    def observe(self, states: np.ndarray, bound: Any) -> np.ndarray:
        """Map an (n_times, n_states) matrix to one observation per row."""

    def missing_params(self, names: Iterable[str]) -> List[str]:
        names = set(names)
        return [name for name in self.param_names if name not in names]

    def require(self, values: Mapping[str, float]) -> None:
        missing = self.missing_params(values.keys())
        if missing:
            raise InputError(f"model {self.name} is missing parameters: {', '.join(missing)}")

    def simulate(
        self,
        values: Any,
        obs_times: Sequence[float],
        doses: Sequence[DoseEvent] = (),
        cfg: Optional[IntegratorConfig] = None,
        horizon: Optional[float] = None,
    ) -> Trajectory:
        """Integrate from t = 0 with the model's own initial conditions."""
        bound = self.bind(values)
        ends = [0.0]
        if horizon is not None:
            ends.append(float(horizon))
        if len(obs_times):
            ends.append(float(np.max(obs_times)))
        if doses:
            ends.append(max(d.time for d in doses))
        return integrate(self, bound, self.initial_state(bound), (0.0, max(ends)), doses, obs_times, cfg)

    def predict(
        self,
        values: Any,
        obs_times: Sequence[float],
        doses: Sequence[DoseEvent] = (),
        cfg: Optional[IntegratorConfig] = None,
    ) -> np.ndarray:
        return self.simulate(values, obs_times, doses, cfg).observations

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r})"
