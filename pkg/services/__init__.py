from .analysis_service import AnalysisOutcome, AnalysisService
from .appendix_service import AppendixOutcome, AppendixService, replicate_seed
from .fit_service import FitOutcome, FitService
from .manifest import RunManifest
from .simulation_service import SimulationOutcome, SimulationService

__all__ = [
    "AnalysisOutcome",
    "AnalysisService",
    "AppendixOutcome",
    "AppendixService",
    "replicate_seed",
    "FitOutcome",
    "FitService",
    "RunManifest",
    "SimulationOutcome",
    "SimulationService",
]
