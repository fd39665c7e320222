from dataclasses import dataclass
from itertools import combinations
from typing import List, Tuple

import numpy as np

from .report import ComparisonReport

IDENTIFIABLE = "IDENTIFIABLE"
NON_IDENTIFIABLE = "NON-IDENTIFIABLE"
INCONCLUSIVE = "INCONCLUSIVE"

MIN_LL_GAP = 2.0
OVERLAP_THRESHOLD = 0.5

DECISION_RULE = (
    "Two fits are equivalent in fit quality when |delta(-2LL)| <= max(2, 2*sqrt(se1^2 + se2^2)). "
    "IDENTIFIABLE: every equivalent pair has overlap > 0.5 and no KS p-value <= alpha. "
    "NON-IDENTIFIABLE: some equivalent pair has overlap < 0.5. "
    "INCONCLUSIVE: anything else."
)


@dataclass
class Verdict:
    parameter: str
    label: str
    reason: str
    n_equivalent_pairs: int


def equivalent_pairs(report: ComparisonReport) -> List[Tuple[int, int]]:
    """Pairs of fit positions whose -2LL values are statistically indistinguishable."""
    m2ll = report.minus2LL
    se = np.nan_to_num(report.mc_se, nan=0.0)
    pairs = []
    for i, j in combinations(range(report.n_fits), 2):
        if not (np.isfinite(m2ll[i]) and np.isfinite(m2ll[j])):
            pairs.append((i, j))
            continue
        tolerance = max(MIN_LL_GAP, 2.0 * float(np.sqrt(se[i] ** 2 + se[j] ** 2)))
        if abs(m2ll[i] - m2ll[j]) <= tolerance:
            pairs.append((i, j))
    return pairs


def parameter_verdict(report: ComparisonReport, parameter: str) -> Verdict:
    comp = report.parameter(parameter)
    pairs = equivalent_pairs(report)
    if not pairs:
        return Verdict(parameter, INCONCLUSIVE, "no two fits are equivalent in fit quality", 0)

    low = [(i, j) for i, j in pairs if comp.overlap[i, j] < OVERLAP_THRESHOLD]
    if low:
        worst = min(comp.overlap[i, j] for i, j in low)
        return Verdict(
            parameter, NON_IDENTIFIABLE,
            f"{len(low)} equivalent pair(s) with overlap < {OVERLAP_THRESHOLD} (minimum {worst:.3g})",
            len(pairs),
        )
    borderline = [(i, j) for i, j in pairs if comp.overlap[i, j] == OVERLAP_THRESHOLD]
    if borderline:
        return Verdict(
            parameter, INCONCLUSIVE,
            f"{len(borderline)} equivalent pair(s) with overlap exactly {OVERLAP_THRESHOLD}",
            len(pairs),
        )
    significant = [(i, j) for i, j in pairs if comp.ks_p[i, j] <= report.alpha]
    if significant:
        return Verdict(
            parameter, INCONCLUSIVE,
            f"overlaps exceed {OVERLAP_THRESHOLD} but {len(significant)} equivalent pair(s) differ by KS at alpha={report.alpha}",
            len(pairs),
        )
    return Verdict(
        parameter, IDENTIFIABLE,
        f"all {len(pairs)} equivalent pairs overlap > {OVERLAP_THRESHOLD} with no significant KS test",
        len(pairs),
    )


def report_verdicts(report: ComparisonReport) -> List[Verdict]:
    return [parameter_verdict(report, name) for name in report.parameters]
