from typing import Optional

from exceptions import InputError
from .base import ModelSpec
from .expgrowth import ConstantModel, ExpGrowthModel
from .friberg import FribergModel
from .tiv import TivModel
from .zalypsis import ZalypsisPkParams

MODEL_NAMES = ("friberg", "tiv", "expgrowth", "constant")


def create_model(
    name: str,
    pk: Optional[ZalypsisPkParams] = None,
    pk_literal: bool = False,
    dose_target: Optional[int] = None,
) -> ModelSpec:
    """Instantiate a structural model by name."""
    if name == "friberg":
        if pk is None:
            raise InputError("the friberg model needs PK parameters")
        return FribergModel(pk=pk, pk_literal=pk_literal, dose_target=dose_target)
    if name == "tiv":
        return TivModel()
    if name == "expgrowth":
        return ExpGrowthModel()
    if name == "constant":
        return ConstantModel()
    raise InputError(f"unknown model {name!r}; expected one of {', '.join(MODEL_NAMES)}")
