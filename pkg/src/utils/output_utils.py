"""Utility functions for run outputs (report CSV, summary, plot script)."""

import math
import re
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd

from src.config import get_logger
from src.calculus.errors import MalformedReport
from src.calculus.reports import REPORT_COLUMNS
from src.suites.base_suite import SuiteResult

logger = get_logger(__name__)

REPORT_FILE = "report.csv"
SUMMARY_FILE = "summary.txt"
PLOT_FILE = "plots.py"

_TIME_RE = re.compile(r"t=([-+0-9.eE]+|inf)$")


def report_frame(results: List[SuiteResult]) -> pd.DataFrame:
    """All report rows in suite order, rows of a suite kept in production order."""
    rows = [report.to_row() for result in results for report in result.reports]
    frame = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    return frame.sort_values("suite", kind="stable").reset_index(drop=True)


def write_report(results: List[SuiteResult], output_dir: Union[str, Path]) -> Path:
    """
    Write report.csv in the shared schema.

    Args:
        results: Suite results, in any order
        output_dir: Directory to write into (created if missing)

    Returns:
        Path of the written file
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / REPORT_FILE
    report_frame(results).to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Report written to {path}")
    return path


def write_summary(
    results: List[SuiteResult],
    output_dir: Union[str, Path],
    seed: int,
    curvature: Optional[str] = None,
) -> Path:
    """Write summary.txt: counts, worst slack per suite, errors and skipped suites."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    total = sum(len(r.reports) for r in results)
    failed = sum(r.failures for r in results)
    lines = [
        "g2lab summary",
        f"seed: {seed}",
        f"curvature: {curvature if curvature is not None else 'n/a'}",
        f"suites: {len(results)}",
        f"checks: {total - failed} passed, {failed} failed",
        "",
        f"{'suite':<12} {'status':<8} {'checks':>7} {'failed':>7} {'worst_slack':>24}  worst_check",
    ]
    for result in sorted(results, key=lambda r: r.suite_name):
        if result.skipped:
            status = "skipped"
        elif not result.success:
            status = "error"
        else:
            status = "pass" if result.failures == 0 else "fail"
        worst = result.worst
        slack = f"{worst.slack:.17g}" if worst else "-"
        name = worst.name if worst else "-"
        lines.append(f"{result.suite_name:<12} {status:<8} {len(result.reports):>7} {result.failures:>7} {slack:>24}  {name}")
    problems = [r for r in results if r.error or r.skipped]
    if problems:
        lines.append("")
        for result in problems:
            if result.error:
                lines.append(f"error in {result.suite_name}: {result.error}")
            else:
                lines.append(f"skipped {result.suite_name}: {result.skipped}")
    path = output_dir / SUMMARY_FILE
    path.write_text("\n".join(lines) + "\n")
    return path


def read_report(path: Union[str, Path]) -> pd.DataFrame:
    """
    Read a report CSV and check it against the shared schema.

    Raises:
        MalformedReport: missing file, wrong header or a non-boolean pass column
    """
    path = Path(path)
    if not path.is_file():
        raise MalformedReport(f"report {path} does not exist")
    try:
        frame = pd.read_csv(path, dtype={"suite": str, "name": str, "state_or_time": str})
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise MalformedReport(f"{path}: {e}") from e
    if list(frame.columns) != REPORT_COLUMNS:
        raise MalformedReport(f"{path}: expected header {','.join(REPORT_COLUMNS)}")
    flags = frame["pass"].astype(str)
    if not flags.isin(["True", "False"]).all():
        raise MalformedReport(f"{path}: pass column must hold True or False")
    frame["pass"] = flags == "True"
    for column in ("lhs", "rhs", "slack", "tolerance"):
        try:
            frame[column] = pd.to_numeric(frame[column])
        except (TypeError, ValueError) as e:
            raise MalformedReport(f"{path}: non-numeric {column} column") from e
    return frame


def _time_of(state) -> Optional[float]:
    """Time encoded in a state_or_time cell, if any."""
    text = str(state)
    match = _TIME_RE.search(text)
    candidate = match.group(1) if match else text
    try:
        value = float(candidate)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _chart(suite: str, frame: pd.DataFrame, index: int) -> List[str]:
    contraction = suite == "contraction"
    lines = [
        f"# {suite}",
        f"fig, ax = plt.subplots(num={index})",
        f"ax.set_title({suite!r})",
    ]
    for name, rows in frame.groupby("name", sort=True):
        times = [_time_of(s) for s in rows["state_or_time"]]
        if any(t is None for t in times):
            times = list(range(len(rows)))
        order = sorted(range(len(times)), key=lambda k: times[k])
        xs = [times[k] for k in order]
        if contraction:
            lhs = [float(rows["lhs"].iloc[k]) for k in order]
            rhs = [float(rows["rhs"].iloc[k]) for k in order]
            lines.append(f"ax.plot({xs!r}, {lhs!r}, marker='o', label={name!r})")
            lines.append(f"ax.plot({xs!r}, {rhs!r}, linestyle='--', label={(name + ' exp(-Kt) reference')!r})")
        else:
            slack = [float(rows["slack"].iloc[k]) for k in order]
            lines.append(f"ax.plot({xs!r}, {slack!r}, marker='o', label={name!r})")
    if contraction:
        lines += ["ax.set_yscale('log')", "ax.set_ylabel('distance')"]
    else:
        lines += ["ax.axhline(0.0, color='black', linewidth=0.5)", "ax.set_ylabel('slack')"]
    lines += [
        "ax.set_xlabel('t')",
        "ax.legend(fontsize='small')",
        f"fig.savefig({(suite + '.png')!r})",
        "",
    ]
    return lines


def emit_plots(report_path: Union[str, Path], script_path: Optional[Union[str, Path]] = None) -> Path:
    """
    Write a matplotlib script with one chart per suite, ordered by suite name.

    Nothing is rendered here; running the script produces one PNG per suite.
    An empty report gives an empty script.

    Args:
        report_path: A report CSV in the shared schema
        script_path: Output path, plots.py next to the report by default

    Returns:
        Path of the written script
    """
    frame = read_report(report_path)
    script_path = Path(script_path) if script_path else Path(report_path).with_name(PLOT_FILE)
    if frame.empty:
        logger.warning(f"Report {report_path} has no rows; writing an empty plot script")
        script_path.write_text("")
        return script_path

    lines = [
        "# Plots of a g2lab report; run with python to render one PNG per suite.",
        "import matplotlib",
        "matplotlib.use('Agg')",
        "import matplotlib.pyplot as plt",
        "",
    ]
    nan_free = frame.replace([math.inf, -math.inf], math.nan).dropna(subset=["lhs", "rhs", "slack"])
    for index, (suite, rows) in enumerate(nan_free.groupby("suite", sort=True), start=1):
        lines += _chart(suite, rows, index)
    script_path.write_text("\n".join(lines))
    logger.info(f"Plot script written to {script_path}")
    return script_path
