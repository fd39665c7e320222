from .dataset import DATASET_COLUMNS, TrialDataset
from .design import NOISE_KINDS, NoiseModel, StudyDesign, friberg_design, tiv_design
from .distributions import (
    TRANSFORMS,
    Individual,
    PopulationDistribution,
    individual_param,
    sample_population,
)
from .synthetic import generate_synthetic, simulate_trajectories

__all__ = [
    "DATASET_COLUMNS",
    "TrialDataset",
    "NOISE_KINDS",
    "NoiseModel",
    "StudyDesign",
    "friberg_design",
    "tiv_design",
    "TRANSFORMS",
    "Individual",
    "PopulationDistribution",
    "individual_param",
    "sample_population",
    "generate_synthetic",
    "simulate_trajectories",
]
