#!/usr/bin/env python3
"""
g2lab Runner Script

Runs the verification suites described by an experiment configuration,
writes report.csv and summary.txt, and turns reports into plot scripts.

Usage:
    python run_lab.py run configs/ou_grid.ini --verbose
    python run_lab.py plots output/report.csv
    python run_lab.py validate configs/chain.ini

Exit codes:
    0: every check passed (or the configuration is valid)
    1: at least one check failed or a suite raised an error
    2: usage, configuration or report-format error
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

from src.config import ENABLE_TRACING, resolve_output_dir
from src.calculus.errors import ConfigParse, MalformedReport
from src.suites.coordinator import Coordinator
from src.utils.experiment_config import load_config
from src.utils.output_utils import emit_plots, write_report, write_summary
from src.utils.tracing import tracing

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def build_parser(prog: str = "run_lab.py") -> argparse.ArgumentParser:
    """Argument parser shared by this script and cli.py."""
    parser = argparse.ArgumentParser(prog=prog, description="Verify Bakry-Emery Gamma-calculus inequalities numerically")
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run the suites selected by a configuration")
    run.add_argument("config", type=str, help="Experiment configuration (INI)")
    run.add_argument("--trace", action="store_true", help="Record suite spans to trace.json")
    run.add_argument("--output-dir", type=str, default=None, help="Override the configured output directory")

    plots = commands.add_parser("plots", help="Write a plot script for a report")
    plots.add_argument("report", type=str, help="report.csv produced by a run")
    plots.add_argument("--output", type=str, default=None, help="Script path (default: plots.py next to the report)")

    validate = commands.add_parser("validate", help="Check a configuration without running it")
    validate.add_argument("config", type=str, help="Experiment configuration (INI)")
    return parser


async def run_experiment(args) -> int:
    """Run the configured suites and write the report and summary."""
    try:
        config = load_config(args.config)
    except ConfigParse as e:
        print(f"\n❌ Invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE

    if getattr(args, "trace", False) or ENABLE_TRACING:
        tracing.enable()
        print("🔍 Tracing enabled.")

    output_dir = Path(resolve_output_dir(getattr(args, "output_dir", None) or config.run.output_dir))
    print(f"\n🚀 Running suites {', '.join(config.run.suites)} (seed {config.run.seed})")

    output = await Coordinator(config, verbose=args.verbose).run()
    report_path = write_report(output.results, output_dir)
    summary_path = write_summary(output.results, output_dir, output.seed, output.curvature)
    trace_path = tracing.save(output_dir / "trace.json")

    print("\n📋 Suite Summary:")
    for result in output.results:
        if result.skipped:
            status = f"⏭️ Skipped: {result.skipped}"
        elif not result.success:
            status = f"❌ Error: {result.error}"
        elif result.failures:
            status = f"❌ {result.failures} of {len(result.reports)} checks failed"
        else:
            status = f"✅ {len(result.reports)} checks passed"
        print(f"  - {result.suite_name}: {status}")
    print(f"\n💾 Report saved to: {report_path}")
    print(f"💾 Summary saved to: {summary_path}")
    if trace_path:
        print(f"💾 Trace saved to: {trace_path}")
    return EXIT_PASS if output.success else EXIT_FAIL


def make_plots(args) -> int:
    """Write the plot script for an existing report."""
    try:
        path = emit_plots(args.report, getattr(args, "output", None))
    except MalformedReport as e:
        print(f"\n❌ Invalid report: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(f"\n📈 Plot script saved to: {path}")
    return EXIT_PASS


def validate_config(args) -> int:
    """Load a configuration and report what it would run."""
    try:
        config = load_config(args.config)
    except ConfigParse as e:
        print(f"\n❌ Invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    space = config.space
    described = f"grid n={space.n} on [{space.a}, {space.b}], V = {space.potential}" if space.kind == "grid" else f"chain from {space.rates_file}"
    print(f"\n✅ {args.config} is valid")
    print(f"  - space: {described}")
    print(f"  - suites: {', '.join(config.run.suites)}")
    print(f"  - seed: {config.run.seed}, K = {config.curvature.K}")
    return EXIT_PASS


def dispatch(args) -> int:
    """Run the selected command and return its exit code."""
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        for name in list(logging.root.manager.loggerDict):
            if name.startswith("src."):
                logging.getLogger(name).setLevel(logging.DEBUG)
    if args.command == "run":
        return asyncio.run(run_experiment(args))
    if args.command == "plots":
        return make_plots(args)
    return validate_config(args)


def main(argv=None) -> int:
    """Main entry point for the script."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
