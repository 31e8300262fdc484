"""Outcome records for inequality and identity checks."""

import math
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

REPORT_COLUMNS = ["suite", "name", "state_or_time", "lhs", "rhs", "slack", "tolerance", "pass"]


class CheckReport(BaseModel):
    """Outcome of one inequality or identity verification."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    name: str = Field(description="Identifier of the checked inequality or identity")
    lhs: float = Field(description="Left-hand side at the worst location")
    rhs: float = Field(description="Right-hand side at the worst location")
    slack: float = Field(description="rhs - lhs at the worst location")
    worst_state: Union[int, float, str] = Field(
        description="State index, time or sample point of the worst violation",
        default="",
    )
    passed: bool = Field(description="Whether slack >= -tolerance", alias="pass")
    tolerance: float = Field(description="Allowed violation", default=0.0)
    suite: str = Field(description="Suite that produced the row", default="")

    @model_validator(mode="after")
    def _pass_matches_slack(self) -> "CheckReport":
        if self.passed != (self.slack >= -self.tolerance):
            raise ValueError(f"{self.name}: pass flag inconsistent with slack {self.slack} and tolerance {self.tolerance}")
        return self

    @classmethod
    def from_sides(
        cls,
        name: str,
        lhs: float,
        rhs: float,
        tolerance: float,
        worst_state: Union[int, float, str] = "",
        suite: str = "",
    ) -> "CheckReport":
        """Build a report from the two sides of an inequality lhs <= rhs."""
        lhs = float(lhs)
        rhs = float(rhs)
        slack = rhs - lhs
        if math.isnan(slack):
            slack = -math.inf
        return cls(
            name=name,
            lhs=lhs,
            rhs=rhs,
            slack=slack,
            worst_state=worst_state,
            passed=slack >= -tolerance,
            tolerance=float(tolerance),
            suite=suite,
        )

    def with_suite(self, suite: str) -> "CheckReport":
        """Return a copy tagged with the producing suite."""
        return self.model_copy(update={"suite": suite})

    def to_row(self) -> dict:
        """Row for the shared CSV schema."""
        return {
            "suite": self.suite,
            "name": self.name,
            "state_or_time": self.worst_state,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def worst_of(reports: List[CheckReport]) -> Optional[CheckReport]:
    """Report with the smallest slack relative to its tolerance."""
    if not reports:
        return None
    return min(reports, key=lambda r: r.slack + r.tolerance)


def pointwise_report(name, lhs, rhs, tolerance, locations=None, suite: str = "") -> CheckReport:
    """Collapse pointwise arrays lhs <= rhs to the report at the worst location."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    slack = rhs - lhs
    k = int(np.argmin(slack))
    where = k if locations is None else locations[k]
    if isinstance(where, np.generic):
        where = where.item()
    return CheckReport.from_sides(name, lhs[k], rhs[k], tolerance, worst_state=where, suite=suite)


def expected_violation(name: str, reports: List[CheckReport]) -> CheckReport:
    """
    Negative control: passes when some report violates its inequality by more than its tolerance.

    lhs is the tolerance of the most violated report and rhs its violation lhs - rhs.
    """
    if not reports:
        raise ValueError(f"{name}: no reports to control")
    worst = min(reports, key=lambda r: r.slack + r.tolerance)
    return CheckReport.from_sides(name, worst.tolerance, -worst.slack, 0.0, worst_state=worst.worst_state)
