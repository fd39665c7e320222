"""Target cell / infected cell / virus model of acute viral infection."""
from dataclasses import dataclass, fields
from typing import Any, Mapping, Tuple

import numpy as np

from exceptions import DomainError
from .base import ModelSpec

STATE_NAMES = ("T", "I", "V")
PARAM_NAMES = ("beta", "p", "delta", "T0", "V0", "c", "d_T")

# log10 is taken of max(V, floor) so transiently non-positive solver output stays finite
VIRAL_LOAD_FLOOR = 1e-12


@dataclass(frozen=True)
class TivParams:
    beta: float
    p: float
    delta: float
    c: float
    d_T: float
    lam: float
    T0: float
    V0: float
    I0: float

    def __post_init__(self):
        # beta = 0 is the uninfectable limit: T stays at steady state while V decays
        if not self.beta >= 0:
            raise DomainError(f"TIV parameter beta must be >= 0 (got {self.beta})")
        bad = [f.name for f in fields(self) if f.name != "beta" and not getattr(self, f.name) > 0]
        if bad:
            raise DomainError(f"TIV parameters must be > 0: {', '.join(bad)}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "TivParams":
        """Build from the fitted/fixed parameters, deriving lambda and I0."""
        lam, i0 = tiv_derived_inits(
            float(values["T0"]), float(values["V0"]), float(values["p"]), float(values["c"]), float(values["d_T"])
        )
        return cls(
            beta=float(values["beta"]),
            p=float(values["p"]),
            delta=float(values["delta"]),
            c=float(values["c"]),
            d_T=float(values["d_T"]),
            lam=lam,
            T0=float(values["T0"]),
            V0=float(values["V0"]),
            I0=i0,
        )


def tiv_derived_inits(T0: float, V0: float, p: float, c: float, d_T: float) -> Tuple[float, float]:
    """Uninfected steady-state production rate and infected cells at t = 0."""
    if p == 0:
        raise ZeroDivisionError("viral production rate p must be non-zero to derive I0 = c*V0/p")
    return T0 * d_T, c * V0 / p


def tiv_rhs(state: np.ndarray, params: TivParams) -> np.ndarray:
    t, i, v = state
    p = params
    infection = p.beta * v * t
    return np.array([p.lam - p.d_T * t - infection, infection - p.delta * i, p.p * i - p.c * v])


def tiv_basic_reproduction_number(params: TivParams) -> float:
    return params.lam * params.beta * params.p / (params.d_T * params.delta * params.c)


class TivModel(ModelSpec):
    """Standard viral dynamics; observed as log10 viral load."""

    name = "tiv"
    state_names = STATE_NAMES
    param_names = PARAM_NAMES
    observation_scale = "log10"

    def bind(self, values: Any) -> TivParams:
        if isinstance(values, TivParams):
            return values
        self.require(values)
        return TivParams.from_mapping(values)

    def rhs(self, t: float, y: np.ndarray, bound: TivParams) -> np.ndarray:
        return tiv_rhs(y, bound)

    def initial_state(self, bound: TivParams) -> np.ndarray:
        return np.array([bound.T0, bound.I0, bound.V0])

    def observe(self, states: np.ndarray, bound: TivParams) -> np.ndarray:
        return np.log10(np.maximum(np.asarray(states)[:, 2], VIRAL_LOAD_FLOOR))
