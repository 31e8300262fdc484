"""Base suite class with tracing, logging and failure isolation."""

import logging
from abc import ABC, abstractmethod
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.config import SUITE_NAMES, get_logger
from src.calculus.core_space import ReversibleGenerator
from src.calculus.errors import GridRequired, KExceedsCurvature
from src.calculus.gamma_calculus import Curvature, CurvatureBound
from src.calculus.reports import CheckReport, worst_of
from src.calculus.refinement import GridLevel
from src.calculus.semigroup import SpectralFactorization
from src.utils.experiment_config import ExperimentConfig
from src.utils.tracing import tracing


class SuiteContext(BaseModel):
    """Shared, read-only inputs of every suite in a run."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    config: ExperimentConfig = Field(description="Validated experiment configuration")
    generator: Optional[ReversibleGenerator] = Field(description="Generator of the configured space", default=None)
    factorization: Optional[SpectralFactorization] = Field(description="Spectral factorisation of the generator", default=None)
    curvature: Optional[Curvature] = Field(description="Computed curvature (interior curvature on grids)", default=None)
    refined: Optional[GridLevel] = Field(description="The grid rebuilt with 2n - 1 nodes, when refinement is on", default=None)

    @property
    def level(self) -> GridLevel:
        """The configured grid as a refinement level."""
        return GridLevel(generator=self.generator, factorization=self.factorization, curvature=self.curvature)


class SuiteResult(BaseModel):
    """Result from a single suite."""

    suite_name: str = Field(description="Name of the suite")
    success: bool = Field(description="Whether the suite ran to completion")
    reports: List[CheckReport] = Field(description="Check reports, tagged with the suite name", default_factory=list)
    error: Optional[str] = Field(description="Error message if the suite failed", default=None)
    skipped: Optional[str] = Field(description="Reason the suite was not applicable", default=None)

    @property
    def failures(self) -> int:
        return sum(not r.passed for r in self.reports)

    @property
    def worst(self) -> Optional[CheckReport]:
        return worst_of(self.reports)


class BaseSuite(ABC):
    """Base class for verification suites."""

    requires_grid = False

    def __init__(self, name: str, verbose: bool = False):
        """
        Initialize a suite.

        Args:
            name: Suite name, one of the configured suite names
            verbose: Whether to enable verbose logging
        """
        if name not in SUITE_NAMES:
            raise ValueError(f"unknown suite {name}")
        self.name = name
        self.verbose = verbose
        self.logger = get_logger(f"suite.{name}")
        if verbose:
            self.logger.setLevel(logging.DEBUG)

    def rng(self, context: SuiteContext) -> np.random.Generator:
        """Generator seeded from the run seed and this suite's position."""
        return np.random.default_rng([context.config.run.seed, SUITE_NAMES.index(self.name)])

    def curvature_parameter(self, context: SuiteContext) -> float:
        """The K used by the estimates: the configured value or the computed curvature."""
        configured = context.config.curvature.K
        if configured != "auto":
            return float(configured)
        if context.curvature is None or context.curvature is CurvatureBound.MINUS_INFINITY:
            raise KExceedsCurvature("K = auto but the generator has no finite curvature lower bound")
        if context.curvature is CurvatureBound.PLUS_INFINITY:
            raise KExceedsCurvature("K = auto but the curvature is unbounded; set K explicitly")
        return float(context.curvature)

    def run(self, context: SuiteContext) -> SuiteResult:
        """
        Run the suite, isolating failures.

        Args:
            context: Shared run inputs

        Returns:
            The suite result; errors are recorded rather than raised
        """
        if self.requires_grid and (context.generator is None or not context.generator.space.is_grid):
            self.logger.info(f"Skipping {self.name}: needs a grid space")
            return SuiteResult(suite_name=self.name, success=True, skipped="requires a grid space")

        with tracing.span(f"{self.name}_suite", {"seed": context.config.run.seed}):
            self.logger.info(f"Starting {self.name} suite")
            try:
                reports = [r.with_suite(self.name) for r in self._checks(context)]
            except GridRequired as e:
                self.logger.info(f"Skipping {self.name}: {e}")
                return SuiteResult(suite_name=self.name, success=True, skipped=str(e))
            except Exception as e:
                self.logger.error(f"Error running {self.name} suite: {type(e).__name__}: {e}")
                return SuiteResult(suite_name=self.name, success=False, error=f"{type(e).__name__}: {e}")

        result = SuiteResult(suite_name=self.name, success=True, reports=reports)
        worst = result.worst
        self.logger.info(
            f"Finished {self.name}: {len(reports)} checks, {result.failures} failing"
            + (f", worst slack {worst.slack:.3e} ({worst.name})" if worst else "")
        )
        return result

    @abstractmethod
    def _checks(self, context: SuiteContext) -> List[CheckReport]:
        """
        Produce the suite's check reports.

        Args:
            context: Shared run inputs

        Returns:
            Reports in a deterministic order
        """
        pass
