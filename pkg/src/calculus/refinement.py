"""Grid refinement: rebuild a grid diffusion at half the step and compare violations.

A grid check only carries weight if its violation (how far the inequality
fails before the discretisation allowance is granted) shrinks as h -> 0.
Each comparison here runs the same check on a grid with n nodes and on
the grid with 2n - 1 nodes over the same interval, so every coarse node is
also a fine node.
"""

from typing import Callable, List, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import BaseModel, ConfigDict, Field

from src.config import TOLERANCES, get_logger
from src.calculus.core_space import ReversibleGenerator, build_weighted_grid
from src.calculus.errors import GridRequired
from src.calculus.gamma_calculus import Curvature, CurvatureBound, interior_curvature, interior_states
from src.calculus.reports import CheckReport
from src.calculus.semigroup import SpectralFactorization, factorize, gradient_estimate_report
from src.calculus.transport import contraction_experiment, evi_check, initial_measure

logger = get_logger(__name__)

# the alpha < 1 violation must halve with h, up to 30%
HALVING_RATIO = 0.65


class GridLevel(BaseModel):
    """A grid generator together with its factorisation and interior curvature."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    generator: ReversibleGenerator = Field(description="Grid generator")
    factorization: SpectralFactorization = Field(description="Spectral factorisation of the generator")
    curvature: Curvature = Field(description="Interior curvature of the grid")

    @classmethod
    def build(cls, a: float, b: float, n: int, V: Callable, fraction: float = 0.1) -> "GridLevel":
        L = build_weighted_grid(a, b, n, V)
        return cls(generator=L, factorization=factorize(L), curvature=interior_curvature(L, fraction))

    @property
    def spacing(self) -> float:
        return self.generator.space.spacing


def refine(level: GridLevel, V: Callable, fraction: float = 0.1) -> GridLevel:
    """The same interval with 2n - 1 nodes, so h is halved."""
    positions = level.generator.space.positions
    if positions is None:
        raise GridRequired("refinement needs a grid space")
    n = 2 * level.generator.n - 1
    logger.info(f"Refining grid on [{positions[0]:g}, {positions[-1]:g}] from {level.generator.n} to {n} nodes")
    return GridLevel.build(float(positions[0]), float(positions[-1]), n, V, fraction)


def violation(reports: Sequence[CheckReport]) -> float:
    """Largest amount by which any report's inequality fails, ignoring its tolerance."""
    return max([0.0] + [-r.slack for r in reports])


def refinement_report(name: str, coarse: float, fine: float, ratio: float = 1.0, floor: float = 1e-9) -> CheckReport:
    """fine <= ratio * coarse, with an absolute floor for violations that are already zero."""
    return CheckReport.from_sides(name, fine, ratio * coarse, floor, worst_state=f"coarse={coarse:.3e}")


def _curvature_error(level: GridLevel, V: Polynomial, fraction: float) -> Optional[float]:
    if isinstance(level.curvature, CurvatureBound):
        return None
    L = level.generator
    continuum = float(np.min(V.deriv(2)(L.space.positions[interior_states(L, fraction)])))
    return abs(float(level.curvature) - continuum)


def curvature_refinement(coarse: GridLevel, fine: GridLevel, V: Polynomial, fraction: float = 0.1) -> CheckReport:
    """
    Distance of the interior curvature from min V'' over the same nodes must not grow.

    Args:
        coarse: Grid with n nodes
        fine: Refined grid with 2n - 1 nodes
        V: Polynomial potential of both grids
        fraction: Boundary layer excluded from the curvature
    """
    errors = [_curvature_error(level, V, fraction) for level in (coarse, fine)]
    if None in errors:
        return CheckReport.from_sides("curvature_refinement", 1.0, 0.0, 0.0, worst_state="unbounded curvature")
    logger.debug(f"Curvature error {errors[0]:.3e} at h={coarse.spacing:g}, {errors[1]:.3e} at h={fine.spacing:g}")
    return refinement_report("curvature_refinement", errors[0], errors[1], 1.0, 10.0 * TOLERANCES["pencil"])


def gradient_refinement(
    coarse: GridLevel,
    fine: GridLevel,
    f: Callable,
    K: float,
    t_list: Sequence[float],
    alpha_list: Sequence[float],
    allowance_constant: float = 10.0,
) -> List[CheckReport]:
    """
    For each alpha < 1, the worst gradient-estimate violation must halve with h.

    Args:
        coarse: Grid with n nodes
        fine: Refined grid with 2n - 1 nodes
        f: Test field as a function of position
        K: Curvature lower bound used at both levels
        t_list: Times
        alpha_list: Exponents; alpha = 1 carries no grid error and is skipped
        allowance_constant: Discretisation constant passed to the estimate
    """
    reports = []
    for alpha in sorted(a for a in alpha_list if a < 1.0):
        observed, largest = [], 1.0
        for level in (coarse, fine):
            values = np.asarray(f(level.generator.space.positions), dtype=float)
            largest = max(largest, float(np.max(np.abs(values))))
            rows = gradient_estimate_report(
                level.factorization, level.generator, values, K, t_list, [alpha],
                curvature=level.curvature, allowance_constant=allowance_constant, include_variance=False,
            )
            observed.append(violation(rows))
        reports.append(
            refinement_report(
                f"gradient_refinement[alpha={alpha:g}]", observed[0], observed[1], HALVING_RATIO, TOLERANCES["gradient"] * largest
            )
        )
    return reports


def contraction_refinement(
    coarse: GridLevel,
    fine: GridLevel,
    K: float,
    x: float,
    y: float,
    t_list: Sequence[float],
    p_list: Sequence[float],
) -> List[CheckReport]:
    """Per p, the worst W_p contraction violation between fundamental solutions must not grow."""
    by_level = [
        contraction_experiment(level.factorization, level.generator, K, x, y, t_list, p_list, curvature=level.curvature)
        for level in (coarse, fine)
    ]
    reports = []
    for p in sorted(p_list):
        name = f"wasserstein_contraction[p={p:g}]"
        coarse_rows, fine_rows = ([r for r in rows if r.name == name] for rows in by_level)
        reports.append(refinement_report(f"contraction_refinement[p={p:g}]", violation(coarse_rows), violation(fine_rows)))
    return reports


def evi_refinement(
    coarse: GridLevel,
    fine: GridLevel,
    K: float,
    mu0: str,
    t_list: Sequence[float],
    delta: float,
) -> CheckReport:
    """The EVI violation must not grow when h and the difference step delta are both halved."""
    observed = []
    for level, step in ((coarse, delta), (fine, 0.5 * delta)):
        L = level.generator
        rows = evi_check(level.factorization, L, K, initial_measure(L, mu0), initial_measure(L, "stationary"), t_list, step)
        observed.append(violation(rows))
    return refinement_report("evi_refinement", observed[0], observed[1])
