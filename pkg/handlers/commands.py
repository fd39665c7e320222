import argparse
import logging
import sys
from pathlib import Path

from config import Config
from run_config import load_run_config
from services import AnalysisService, AppendixService, FitService, SimulationService
from utils.formatters import ReportFormatter

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL_FAILURE = 4


def resolve_out_dir(out: str) -> Path:
    """A bare name goes under Config.OUTPUT_DIR; anything with a directory part is used as given."""
    path = Path(out)
    if not path.is_absolute() and len(path.parts) == 1:
        return Path(Config.OUTPUT_DIR) / path
    return path


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer (got {value})")
    return seed


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1 (got {value})")
    return n


def _common(parser: argparse.ArgumentParser, config_required: bool = True):
    if config_required:
        parser.add_argument("--config", required=True, help="run config JSON (or a manifest.json to re-run)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=_seed, default=None, help="root seed; re-derives every stage seed")
    parser.add_argument("--workers", type=_positive_int, default=Config.WORKERS, help="worker processes")


def register_commands(parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    """Register all subcommands on the top-level parser."""
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="generate a synthetic trial")
    _common(simulate)

    fit = sub.add_parser("fit", help="multi-start SAEM fits ranked by AIC")
    fit.add_argument("--data", required=True, help="dataset CSV (ID,TIME,Y,AMT,EVID)")
    _common(fit)
    fit.add_argument("--n-starts", type=_positive_int, default=None, help="number of starts (config default 100)")
    fit.add_argument("--top-k", type=_positive_int, default=None, help="fits listed in best.json")

    analyze = sub.add_parser("analyze", help="compare the best fits and print a verdict per parameter")
    analyze.add_argument("--fits", required=True, help="output directory of a fit run")
    analyze.add_argument("--out", required=True, help="output directory")
    analyze.add_argument("--alpha", type=float, default=Config.DEFAULT_ALPHA, help="KS significance level")
    analyze.add_argument("--top-k", type=_positive_int, default=Config.DEFAULT_TOP_K, help="number of fits compared")

    appendix = sub.add_parser("appendix", help="exponential growth likelihood landscapes")
    _common(appendix)
    return parser


def handle_command(args: argparse.Namespace) -> int:
    """Route parsed arguments to their handler and return the exit code."""
    if args.command == "simulate":
        return handle_simulate(args)
    elif args.command == "fit":
        return handle_fit(args)
    elif args.command == "analyze":
        return handle_analyze(args)
    elif args.command == "appendix":
        return handle_appendix(args)
    raise ValueError(f"unknown command {args.command!r}")


def handle_simulate(args: argparse.Namespace) -> int:
    cfg = load_run_config(Path(args.config), args.seed)
    outcome = SimulationService(workers=args.workers).run(cfg, resolve_out_dir(args.out))
    frame = outcome.dataset.to_frame()
    n_doses = int((frame["EVID"] == 1).sum())
    sys.stdout.write(ReportFormatter.format_simulation(
        len(outcome.individuals), len(frame) - n_doses, n_doses, str(outcome.out_dir)
    ))
    return EXIT_OK


def handle_fit(args: argparse.Namespace) -> int:
    cfg = load_run_config(Path(args.config), args.seed)
    outcome = FitService(workers=args.workers).run(
        cfg, Path(args.data), resolve_out_dir(args.out), args.n_starts, args.top_k
    )
    result = outcome.result
    sys.stdout.write(ReportFormatter.format_fit_summary(
        [fit.summary() for fit in result.fits], n_failed=len(result.failures), limit=outcome.top_k
    ))
    if result.partial_failure:
        logger.warning("%d of %d starts failed; results written", len(result.failures), result.n_starts)
        return EXIT_PARTIAL_FAILURE
    return EXIT_OK


def handle_analyze(args: argparse.Namespace) -> int:
    outcome = AnalysisService(alpha=args.alpha, top_k=args.top_k).run(Path(args.fits), resolve_out_dir(args.out))
    sys.stdout.write(outcome.text)
    return EXIT_OK


def handle_appendix(args: argparse.Namespace) -> int:
    cfg = load_run_config(Path(args.config), args.seed)
    outcome = AppendixService(workers=args.workers).run(cfg, resolve_out_dir(args.out))
    sys.stdout.write(ReportFormatter.format_landscape_summary(outcome.summaries))
    return EXIT_OK
