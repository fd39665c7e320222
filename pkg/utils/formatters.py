import math
from typing import Dict, Iterable, List, Mapping, Sequence

from identifiability import CLUSTER_RULE, DECISION_RULE, ComparisonReport, Verdict


def _num(value, digits: int = 4) -> str:
    if value is None:
        return "-"
    x = float(value)
    if math.isnan(x):
        return "-"
    return f"{x:.{digits}g}"


def _table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> List[str]:
    rows = [list(map(str, r)) for r in rows]
    widths = [max(len(h), *(len(r[k]) for r in rows)) if rows else len(h) for k, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows)
    return lines


class ReportFormatter:
    """Plain-text renderings of run results for the terminal and verdict files."""

    @staticmethod
    def format_verdicts(report: ComparisonReport, verdicts: Sequence[Verdict]) -> str:
        """One-page verdict: decision rule, per-parameter label and summary statistics."""
        summary = {row["parameter"]: row for row in report.summary()}
        lines = [
            "Practical identifiability verdict",
            "=" * 33,
            f"fits compared: {report.n_fits} ({report.n_pairs} pairs)",
            f"alpha: {report.alpha}  (Bonferroni-adjusted: {_num(report.bonferroni_alpha)})",
            "",
            "Decision rule:",
            f"  {DECISION_RULE}",
            "Clusters:",
            f"  {CLUSTER_RULE}",
            "",
        ]
        rows = []
        for v in verdicts:
            s = summary[v.parameter]
            rows.append([
                v.parameter,
                v.label,
                _num(s["mean_overlap_all_pairs"], 3),
                _num(s["min_overlap"], 3),
                f"{s['n_ks_significant']}/{s['n_pairs']}",
                str(s["n_clusters"]),
            ])
        lines.extend(_table(["parameter", "verdict", "mean o", "min o", "KS sig", "clusters"], rows))
        lines.append("")
        for v in verdicts:
            lines.append(f"{v.parameter}: {v.reason}")
        if report.fixed_effects:
            lines.append("")
            lines.append("Not compared (no inter-individual variability in the fits):")
            for name, values in report.fixed_effects.items():
                lines.append(f"  {name}: " + ", ".join(_num(x) for x in values))
        return "\n".join(lines) + "\n"

    @staticmethod
    def format_fit_summary(rows: Sequence[Mapping[str, object]], n_failed: int = 0, limit: int = 10) -> str:
        """Ranked fits, best first."""
        shown = [
            [str(k), str(r["start_index"]), _num(r["minus2LL"], 8), _num(r["mc_se"], 3), _num(r["aic"], 8)]
            for k, r in enumerate(rows[:limit], start=1)
        ]
        lines = _table(["rank", "start", "-2LL", "se", "AIC"], shown)
        if len(rows) > limit:
            lines.append(f"... {len(rows) - limit} more in summary.csv")
        if n_failed:
            lines.append(f"{n_failed} start(s) failed; see failures.json")
        return "\n".join(lines) + "\n"

    @staticmethod
    def format_landscape_summary(summaries: Mapping[int, Mapping[str, float]]) -> str:
        """Top-region size and distance to the generating means per replicate count."""
        rows = [
            [str(n), str(s["n_top"]), _num(s["top_region_diameter"], 3), _num(s["max_top_distance_to_truth"], 3)]
            for n, s in sorted(summaries.items())
        ]
        return "\n".join(_table(["n", "top points", "diameter", "max dist to truth"], rows)) + "\n"

    @staticmethod
    def format_simulation(n_individuals: int, n_observations: int, n_doses: int, out_dir: str) -> str:
        return f"simulated {n_individuals} individuals: {n_observations} observations, {n_doses} dose rows -> {out_dir}\n"

    @staticmethod
    def format_error(message: str) -> str:
        return f"Error: {message}\n"

    @staticmethod
    def format_timings(timings: Dict[str, float]) -> str:
        return ", ".join(f"{stage} {seconds:.1f}s" for stage, seconds in timings.items())
