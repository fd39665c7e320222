from .expgrowth import (
    DEFAULT_BOX,
    EXPGROWTH_TIMES,
    REPLICATE_COUNTS,
    TRUE_MEANS,
    CommonDraws,
    ExpGrowthDataset,
    LikelihoodSample,
    generate_expgrowth_data,
    landscape_points,
    landscape_summary,
    likelihood_landscape,
    mc_loglik,
    top_region_diameter,
)

__all__ = [
    "DEFAULT_BOX",
    "EXPGROWTH_TIMES",
    "REPLICATE_COUNTS",
    "TRUE_MEANS",
    "CommonDraws",
    "ExpGrowthDataset",
    "LikelihoodSample",
    "generate_expgrowth_data",
    "landscape_points",
    "landscape_summary",
    "likelihood_landscape",
    "mc_loglik",
    "top_region_diameter",
]
