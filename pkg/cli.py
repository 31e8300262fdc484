#!/usr/bin/env python3
"""
g2lab command-line interface.

Usage:
    python cli.py run configs/ou_grid.ini
    python cli.py plots output/report.csv
    python cli.py validate configs/chain.ini
    python cli.py --verbose run configs/chain.ini --trace

The environment variable G2LAB_OUT overrides the output directory of a run.
"""

import os
import sys

from dotenv import load_dotenv

# Ensure we can import the run_lab module
sys.path.append(os.path.dirname(os.path.abspath(__file__)))
import run_lab

cli_parser = run_lab.build_parser(prog="g2lab")


def main(argv=None) -> int:
    """Main entry point for the CLI."""
    load_dotenv()
    cli_args = cli_parser.parse_args(argv)
    return run_lab.dispatch(cli_args)


if __name__ == "__main__":
    sys.exit(main())
