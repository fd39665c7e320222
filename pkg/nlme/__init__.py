from .error_models import ERROR_KINDS, ErrorModel
from .likelihood import LikelihoodEstimate, log_likelihood_is
from .multistart import (
    MultiStartResult,
    StartFailure,
    multi_start,
    sample_initial_estimates,
    start_seed,
)
from .predictions import fit_predictions
from .saem import saem_fit
from .statmodel import FitResult, SaemConfig, StatModelSpec, aic

__all__ = [
    "ERROR_KINDS",
    "ErrorModel",
    "LikelihoodEstimate",
    "log_likelihood_is",
    "MultiStartResult",
    "StartFailure",
    "multi_start",
    "sample_initial_estimates",
    "start_seed",
    "fit_predictions",
    "saem_fit",
    "FitResult",
    "SaemConfig",
    "StatModelSpec",
    "aic",
]
