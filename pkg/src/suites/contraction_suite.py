"""Wasserstein contraction of the heat flow on grid diffusions."""

from typing import List

import numpy as np

from src.calculus.reports import CheckReport, worst_of
from src.calculus.refinement import contraction_refinement
from src.calculus.transport import (
    INF,
    CostFunction,
    DiscreteMeasure,
    contraction_experiment,
    decay_rate_check,
    density_contraction_check,
    initial_measure,
    transport_cost_lp,
    wasserstein_1d,
)
from src.suites.base_suite import BaseSuite, SuiteContext

ORACLE_PAIRS = 50
ORACLE_MAX_ATOMS = 30


def _random_measure(rng: np.random.Generator) -> DiscreteMeasure:
    size = int(rng.integers(1, ORACLE_MAX_ATOMS + 1))
    support = np.sort(rng.uniform(-3.0, 3.0, size=size))
    return DiscreteMeasure.from_masses(support, rng.uniform(0.05, 1.0, size=size))


class ContractionSuite(BaseSuite):
    """Fundamental-solution contraction, decay rate, and the LP against the quantile solver."""

    requires_grid = True

    def __init__(self, verbose: bool = False):
        super().__init__("contraction", verbose)

    def _oracle_checks(self, rng: np.random.Generator) -> List[CheckReport]:
        by_name = {}
        for k in range(ORACLE_PAIRS):
            mu, nu = _random_measure(rng), _random_measure(rng)
            for p in (1.0, 2.0, 3.0):
                quantile = wasserstein_1d(mu, nu, p) ** p
                value, _ = transport_cost_lp(mu, nu, CostFunction.power(p))
                name = f"lp_quantile_agreement[p={p:g}]"
                by_name.setdefault(name, []).append(
                    CheckReport.from_sides(name, abs(value - quantile), 0.0, 1e-9 * max(1.0, quantile), worst_state=f"pair{k}")
                )
            bottleneck, _ = transport_cost_lp(mu, nu, CostFunction.sup())
            quantile = wasserstein_1d(mu, nu, INF)
            by_name.setdefault("lp_quantile_agreement[p=inf]", []).append(
                CheckReport.from_sides(
                    "lp_quantile_agreement[p=inf]", abs(bottleneck - quantile), 0.0, 1e-9 * max(1.0, quantile), worst_state=f"pair{k}"
                )
            )
        return [worst_of(reports) for reports in by_name.values()]

    def _checks(self, context: SuiteContext) -> List[CheckReport]:
        F, L = context.factorization, context.generator
        settings = context.config.contraction
        K = self.curvature_parameter(context)
        t_list = context.config.times.t_list
        costs = [CostFunction.piecewise(settings.cost_breakpoints)] if settings.cost_breakpoints else []

        reports: List[CheckReport] = []
        for x, y in settings.pairs:
            rows = contraction_experiment(
                F, L, K, x, y, t_list, settings.p_list, costs=costs, curvature=context.curvature
            )
            reports.extend(r.model_copy(update={"worst_state": f"{x:g}:{y:g}@t={r.worst_state}"}) for r in rows)
            reports.append(decay_rate_check(F, L, K, x, y, settings.decay_times))
            if context.refined is not None:
                rows = contraction_refinement(context.level, context.refined, K, x, y, t_list, settings.p_list)
                reports.extend(r.model_copy(update={"worst_state": f"{x:g}:{y:g} {r.worst_state}"}) for r in rows)

        mu, nu = initial_measure(L, "shifted:-1"), initial_measure(L, "shifted:1")
        reports.extend(density_contraction_check(F, L, K, mu, nu, t_list, settings.p_list, curvature=context.curvature))
        reports.extend(self._oracle_checks(self.rng(context)))
        self.logger.debug(f"Contraction at K={K:.6g} for {len(settings.pairs)} pairs")
        return reports
