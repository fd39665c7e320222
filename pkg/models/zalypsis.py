"""Four-compartment Zalypsis pharmacokinetics (central, fast, two slow tissues)."""
from dataclasses import dataclass, fields
from typing import Mapping

import numpy as np

from exceptions import DomainError

STATE_NAMES = ("Cp", "Cf", "Csl1", "Csl2")


@dataclass(frozen=True)
class ZalypsisPkParams:
    k_fp: float
    k_pf: float
    k_sl1p: float
    k_psl1: float
    k_sl2f: float
    k_psl2: float
    k_fsl2: float
    k_cl: float

    def __post_init__(self):
        negative = [f.name for f in fields(self) if not getattr(self, f.name) >= 0]
        if negative:
            raise DomainError(f"PK rates must be >= 0: {', '.join(negative)}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "ZalypsisPkParams":
        return cls(**{f.name: float(values[f.name]) for f in fields(cls)})

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# Test fixture only. The published PK estimates are not reproduced here;
# these rates just give a multi-day exposure above EC50 after a bolus.
PLACEHOLDER_PK = ZalypsisPkParams(
    k_fp=3.0, k_pf=5.0, k_sl1p=0.2, k_psl1=1.0, k_sl2f=0.1, k_psl2=0.5, k_fsl2=0.3, k_cl=2.0
)


def zalypsis_pk_rhs(state: np.ndarray, params: ZalypsisPkParams, literal: bool = False) -> np.ndarray:
    """
    Derivatives of (Cp, Cf, Csl1, Csl2). Dosing enters through events, not here.

    The corrected reading (default) restores the missing "+" in the Cf
    equation, adds k_psl2 to the plasma outflow and routes the k_fsl2
    outflow of Cf into Csl2, which makes the system mass-conserving when
    k_cl = 0. `literal=True` evaluates the equations exactly as printed.
    """
    cp, cf, csl1, csl2 = state
    p = params
    if literal:
        d_cp = p.k_fp * cf + p.k_sl1p * csl1 - (p.k_pf + p.k_psl1 + p.k_cl) * cp
        d_cf = p.k_pf * cp * p.k_sl2f * csl2 - (p.k_fp + p.k_fsl2) * cf
        d_csl2 = p.k_psl2 * cp - p.k_sl2f * csl2
    else:
        d_cp = p.k_fp * cf + p.k_sl1p * csl1 - (p.k_pf + p.k_psl1 + p.k_psl2 + p.k_cl) * cp
        d_cf = p.k_pf * cp + p.k_sl2f * csl2 - (p.k_fp + p.k_fsl2) * cf
        d_csl2 = p.k_psl2 * cp + p.k_fsl2 * cf - p.k_sl2f * csl2
    d_csl1 = p.k_psl1 * cp - p.k_sl1p * csl1
    return np.array([d_cp, d_cf, d_csl1, d_csl2])
