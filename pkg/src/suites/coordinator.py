"""Coordinator that prepares the shared context and runs the selected suites."""

import asyncio
from typing import Dict, List, Optional, Type

from pydantic import BaseModel, Field

from src.config import get_logger
from src.calculus.core_space import ReversibleGenerator, build_weighted_grid, read_generator
from src.calculus.gamma_calculus import CurvatureBound, curvature_global, interior_curvature
from src.calculus.polynomials import parse_univariate
from src.calculus.refinement import GridLevel, refine
from src.calculus.semigroup import factorize
from src.suites.base_suite import BaseSuite, SuiteContext, SuiteResult
from src.suites.calculus_suite import CalculusSuite
from src.suites.cd_suite import CdSuite
from src.suites.contraction_suite import ContractionSuite
from src.suites.curvature_suite import CurvatureSuite
from src.suites.evi_suite import EviSuite
from src.suites.gradient_suite import GradientSuite
from src.utils.experiment_config import ExperimentConfig
from src.utils.tracing import tracing

logger = get_logger(__name__)

SUITES: Dict[str, Type[BaseSuite]] = {
    "calculus": CalculusSuite,
    "curvature": CurvatureSuite,
    "gradient": GradientSuite,
    "contraction": ContractionSuite,
    "evi": EviSuite,
    "cd": CdSuite,
}


class RunOutput(BaseModel):
    """Results of one run, ordered by suite name."""

    results: List[SuiteResult] = Field(description="One result per selected suite", default_factory=list)
    seed: int = Field(description="Seed the run was made with")
    curvature: Optional[str] = Field(description="Computed curvature, as reported in the summary", default=None)

    @property
    def success(self) -> bool:
        return all(r.success and r.failures == 0 for r in self.results)


def build_generator(config: ExperimentConfig) -> ReversibleGenerator:
    """The generator described by the [space] section."""
    space = config.space
    if space.kind == "grid":
        return build_weighted_grid(space.a, space.b, space.n, parse_univariate(space.potential))
    return read_generator(space.rates_file)


class Coordinator:
    """Builds the generator, its factorisation and curvature once, then fans out to the suites."""

    def __init__(self, config: ExperimentConfig, verbose: bool = False):
        """
        Initialize the coordinator and its suites.

        Args:
            config: Validated experiment configuration
            verbose: Whether suites log at DEBUG
        """
        self.config = config
        self.verbose = verbose
        self.suites = [SUITES[name](verbose=verbose) for name in config.run.suites]
        logger.info(f"Coordinator initialized with suites {config.run.suites}, seed {config.run.seed}")

    def prepare(self) -> SuiteContext:
        """Assemble the shared context; errors propagate to ``run``."""
        with tracing.span("prepare_context"):
            L = build_generator(self.config)
            F = factorize(L)
            fraction = self.config.curvature.interior_fraction
            curvature = interior_curvature(L, fraction) if L.space.is_grid else curvature_global(L)
            shown = curvature.value if isinstance(curvature, CurvatureBound) else f"{curvature:.6g}"
            logger.info(f"Prepared generator with {L.n} states, curvature {shown}")
            refined = None
            if L.space.is_grid and self.config.run.refinement:
                level = GridLevel(generator=L, factorization=F, curvature=curvature)
                refined = refine(level, parse_univariate(self.config.space.potential), fraction)
        return SuiteContext(config=self.config, generator=L, factorization=F, curvature=curvature, refined=refined)

    async def run(self) -> RunOutput:
        """
        Run every selected suite concurrently.

        Returns:
            Results sorted by suite name; a failed preparation marks every suite failed
        """
        with tracing.trace("g2lab_run", {"suites": self.config.run.suites, "seed": self.config.run.seed}):
            try:
                context = self.prepare()
            except Exception as e:
                logger.error(f"Error preparing the run: {type(e).__name__}: {e}")
                error = f"{type(e).__name__}: {e}"
                results = [SuiteResult(suite_name=s.name, success=False, error=error) for s in self.suites]
                return RunOutput(results=sorted(results, key=lambda r: r.suite_name), seed=self.config.run.seed)

            results = await asyncio.gather(*[asyncio.to_thread(suite.run, context) for suite in self.suites])

        curvature = context.curvature
        return RunOutput(
            results=sorted(results, key=lambda r: r.suite_name),
            seed=self.config.run.seed,
            curvature=curvature.value if isinstance(curvature, CurvatureBound) else f"{curvature:.17g}",
        )
