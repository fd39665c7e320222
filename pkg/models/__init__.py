from .base import ModelSpec
from .expgrowth import ConstantModel, ExpGrowthModel, ExpGrowthParams, expgrowth_solution
from .friberg import FribergModel, FribergParams, emax_effect, friberg_initial_state, friberg_rhs
from .registry import MODEL_NAMES, create_model
from .tiv import TivModel, TivParams, tiv_basic_reproduction_number, tiv_derived_inits, tiv_rhs
from .zalypsis import PLACEHOLDER_PK, ZalypsisPkParams, zalypsis_pk_rhs

__all__ = [
    "ModelSpec",
    "ConstantModel",
    "ExpGrowthModel",
    "ExpGrowthParams",
    "expgrowth_solution",
    "FribergModel",
    "FribergParams",
    "emax_effect",
    "friberg_initial_state",
    "friberg_rhs",
    "MODEL_NAMES",
    "create_model",
    "TivModel",
    "TivParams",
    "tiv_basic_reproduction_number",
    "tiv_derived_inits",
    "tiv_rhs",
    "PLACEHOLDER_PK",
    "ZalypsisPkParams",
    "zalypsis_pk_rhs",
]
