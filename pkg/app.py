#!/usr/bin/env python3
"""
popident - Main Application Entry Point

Practical identifiability of nonlinear mixed-effects models:
- simulate: synthetic trials from a population model
- fit: multi-start SAEM with importance-sampled likelihood and AIC ranking
- analyze: KS tests and overlap indices across the best fits, with a verdict per parameter
- appendix: Monte Carlo likelihood landscapes of the exponential growth model
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from config import Config
from exceptions import PopIdentError
from handlers import handle_command, register_commands
from utils.formatters import ReportFormatter

logger = logging.getLogger(__name__)


def create_parser() -> argparse.ArgumentParser:
    """Create the command-line parser with every subcommand registered."""
    parser = argparse.ArgumentParser(
        prog=Config.APP_NAME,
        description="Practical identifiability of nonlinear mixed-effects models.",
    )
    parser.add_argument("--version", action="version", version=f"{Config.APP_NAME} {Config.APP_VERSION}")
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help=f"logging level (default {Config.LOG_LEVEL})",
    )
    return register_commands(parser)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = create_parser().parse_args(argv)

    try:
        Config.validate()
    except ValueError as e:
        sys.stderr.write(ReportFormatter.format_error(str(e)))
        return 2

    # Set up logging
    logging.basicConfig(
        level=args.log_level or Config.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        return handle_command(args)
    except PopIdentError as e:
        logger.error("%s failed: %s", args.command, e)
        sys.stderr.write(ReportFormatter.format_error(str(e)))
        return e.exit_code
    except OSError as e:
        logger.error("%s failed: %s", args.command, e)
        sys.stderr.write(ReportFormatter.format_error(str(e)))
        return 1


if __name__ == "__main__":
    sys.exit(main())
