from .ks import KsResult, SampleSet, exact_pvalue, ks_two_sample
from .overlap import DensitySpec, overlap_index, overlap_on_linear_scale, total_variation
from .report import (
    CLUSTER_RULE,
    ComparisonReport,
    ParameterComparison,
    cluster_fits,
    pairwise_report,
)
from .verdict import (
    DECISION_RULE,
    IDENTIFIABLE,
    INCONCLUSIVE,
    NON_IDENTIFIABLE,
    Verdict,
    equivalent_pairs,
    parameter_verdict,
    report_verdicts,
)

__all__ = [
    "KsResult",
    "SampleSet",
    "exact_pvalue",
    "ks_two_sample",
    "DensitySpec",
    "overlap_index",
    "overlap_on_linear_scale",
    "total_variation",
    "CLUSTER_RULE",
    "ComparisonReport",
    "ParameterComparison",
    "cluster_fits",
    "pairwise_report",
    "DECISION_RULE",
    "IDENTIFIABLE",
    "INCONCLUSIVE",
    "NON_IDENTIFIABLE",
    "Verdict",
    "equivalent_pairs",
    "parameter_verdict",
    "report_verdicts",
]
