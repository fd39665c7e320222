"""Friberg transit-compartment neutropenia model coupled to Zalypsis PK."""
from dataclasses import dataclass, fields
from typing import Any, Mapping, Optional

import numpy as np

from exceptions import DomainError
from .base import ModelSpec
from .zalypsis import STATE_NAMES as PK_STATE_NAMES
from .zalypsis import ZalypsisPkParams, zalypsis_pk_rhs

FRIBERG_STATE_NAMES = ("P", "T1", "T2", "T3", "N")
PARAM_NAMES = ("k_prol", "k_tr", "k_circ", "gamma", "N0", "EC50", "Emax")
CENTRAL_COMPARTMENT = len(FRIBERG_STATE_NAMES)


@dataclass(frozen=True)
class FribergParams:
    k_prol: float
    k_tr: float
    k_circ: float
    gamma: float
    N0: float
    EC50: float
    Emax: float

    def __post_init__(self):
        bad = [name for name in ("k_prol", "k_tr", "k_circ") if not getattr(self, name) > 0]
        if bad:
            raise DomainError(f"rates must be > 0: {', '.join(bad)}")
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be >= 0 (got {self.gamma})")
        if not 0 <= self.Emax <= 1:
            raise DomainError(f"Emax must lie in [0, 1] (got {self.Emax})")
        if not self.N0 > 0:
            raise DomainError(f"N0 must be > 0 (got {self.N0})")
        if not self.EC50 > 0:
            raise DomainError(f"EC50 must be > 0 (got {self.EC50})")

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "FribergParams":
        return cls(**{f.name: float(values[f.name]) for f in fields(cls)})


def emax_effect(cp: float, emax: float, ec50: float) -> float:
    """Fractional inhibition Emax*Cp/(EC50+Cp)."""
    if not ec50 > 0:
        raise DomainError(f"EC50 must be > 0 (got {ec50})")
    return emax * cp / (ec50 + cp)


def friberg_rhs(state: np.ndarray, params: FribergParams, drug_effect: float) -> np.ndarray:
    """Derivatives of (P, T1, T2, T3, N) under proliferation inhibition `drug_effect`."""
    prol, t1, t2, t3, n = state
    if not n > 0:
        raise DomainError(f"circulating neutrophils must be > 0 for the feedback term (got {n})")
    p = params
    feedback = (p.N0 / n) ** p.gamma
    d_prol = ((1.0 - drug_effect) * feedback - 1.0) * p.k_prol * prol
    d_t1 = p.k_prol * prol - p.k_tr * t1
    d_t2 = p.k_tr * (t1 - t2)
    d_t3 = p.k_tr * (t2 - t3)
    d_n = p.k_tr * t3 - p.k_circ * n
    return np.array([d_prol, d_t1, d_t2, d_t3, d_n])


def friberg_initial_state(params: FribergParams) -> np.ndarray:
    """Baseline equilibrium: N = N0, transit = k_circ*N0/k_tr, P = k_circ*N0/k_prol."""
    transit = params.k_circ * params.N0 / params.k_tr
    return np.array([params.k_circ * params.N0 / params.k_prol, transit, transit, transit, params.N0])


class FribergModel(ModelSpec):
    """Neutrophil dynamics driven by plasma concentration of a four-compartment PK model."""

    name = "friberg"
    state_names = FRIBERG_STATE_NAMES + PK_STATE_NAMES
    param_names = PARAM_NAMES

    def __init__(self, pk: ZalypsisPkParams, pk_literal: bool = False, dose_target: Optional[int] = None):
        self.pk = pk
        self.pk_literal = pk_literal
        self.dose_target = CENTRAL_COMPARTMENT if dose_target is None else dose_target

    def bind(self, values: Any) -> FribergParams:
        if isinstance(values, FribergParams):
            return values
        self.require(values)
        return FribergParams.from_mapping(values)

    def rhs(self, t: float, y: np.ndarray, bound: FribergParams) -> np.ndarray:
        cp = max(y[CENTRAL_COMPARTMENT], 0.0)
        effect = min(1.0, max(0.0, emax_effect(cp, bound.Emax, bound.EC50)))
        return np.concatenate(
            (
                friberg_rhs(y[:CENTRAL_COMPARTMENT], bound, effect),
                zalypsis_pk_rhs(y[CENTRAL_COMPARTMENT:], self.pk, self.pk_literal),
            )
        )

    def initial_state(self, bound: FribergParams) -> np.ndarray:
        return np.concatenate((friberg_initial_state(bound), np.zeros(len(PK_STATE_NAMES))))

    def observe(self, states: np.ndarray, bound: FribergParams) -> np.ndarray:
        return np.asarray(states)[:, FRIBERG_STATE_NAMES.index("N")]
