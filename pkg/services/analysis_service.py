import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List

import storage
from config import Config
from exceptions import InputError
from identifiability import ComparisonReport, Verdict, pairwise_report, report_verdicts
from utils.formatters import ReportFormatter
from utils.plots import plot_density_curves, plot_violins
from .manifest import RunManifest

logger = logging.getLogger(__name__)


@dataclass
class AnalysisOutcome:
    report: ComparisonReport
    verdicts: List[Verdict]
    text: str
    manifest: RunManifest
    out_dir: Path


class AnalysisService:
    """Pairwise comparison of the best fits and the per-parameter verdict."""

    def __init__(self, alpha: float = Config.DEFAULT_ALPHA, top_k: int = Config.DEFAULT_TOP_K, render: bool = True):
        if not 0 < alpha < 1:
            raise InputError(f"alpha must lie in (0, 1) (got {alpha})")
        if top_k < 2:
            raise InputError(f"top_k must be >= 2 to compare fits (got {top_k})")
        self.alpha = alpha
        self.top_k = top_k
        self.render = render

    def run(self, fits_dir: Path, out_dir: Path) -> AnalysisOutcome:
        fits = storage.load_fits(fits_dir, self.top_k)
        if len(fits) < 2:
            raise InputError(f"{fits_dir} holds {len(fits)} completed fit(s); at least 2 are needed")
        out_dir = storage.init_output_dir(out_dir)
        manifest = RunManifest.for_inputs(
            "analyze", fits=str(fits_dir), alpha=self.alpha, top_k=self.top_k,
            fit_labels=[fit.start_index for fit in fits],
        )

        with manifest.stage("compare"):
            report = pairwise_report(fits, self.alpha)
            verdicts = report_verdicts(report)
        storage.save_report(report, out_dir)

        with manifest.stage("plot_data"):
            names = list(report.parameters)
            violins = storage.violin_data(fits, names)
            storage.save_violin_data(violins, out_dir / "violins.csv")
            curves = storage.density_curves(fits, names)
            storage.save_density_curves(curves, out_dir / "densities.csv")
            if self.render:
                for name in names:
                    plot_density_curves(curves, name, out_dir / name / "densities.svg")
                    plot_violins(violins, name, out_dir / name / "violins.svg")

        text = ReportFormatter.format_verdicts(report, verdicts)
        storage.save_text(text, out_dir / "verdict.txt")
        storage.save_json(
            {"verdicts": [{"parameter": v.parameter, "label": v.label, "reason": v.reason,
                           "n_equivalent_pairs": v.n_equivalent_pairs} for v in verdicts]},
            out_dir / "verdicts.json",
        )
        storage.save_manifest(manifest.to_dict(), out_dir / "manifest.json")
        logger.info("analysis of %d fits written to %s", len(fits), out_dir)
        return AnalysisOutcome(report=report, verdicts=verdicts, text=text, manifest=manifest, out_dir=out_dir)
