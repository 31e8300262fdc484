"""Heat semigroup sanity checks and gradient estimates."""

from typing import List

import numpy as np

from src.calculus.polynomials import parse_univariate
from src.calculus.reports import CheckReport, worst_of
from src.calculus.refinement import gradient_refinement
from src.calculus.semigroup import (
    dual_gradient_report,
    gradient_estimate_report,
    heat_apply,
    l2_norm,
    mollification_errors,
    mollify_generator_identity,
)
from src.suites.base_suite import BaseSuite, SuiteContext

MOLLIFIER_EPSILONS = (1e-1, 1e-2, 1e-3)


class GradientSuite(BaseSuite):
    """Semigroup law, mass, contractivity, mollifier and gradient estimates."""

    def __init__(self, verbose: bool = False):
        super().__init__("gradient", verbose)

    def _fields(self, context: SuiteContext) -> np.ndarray:
        L = context.generator
        settings = context.config.gradient
        if L.space.is_grid:
            f = parse_univariate(settings.test_function)(np.array(L.space.positions))
            return np.asarray(f, dtype=float).reshape(L.n, 1)
        return self.rng(context).standard_normal((L.n, settings.n_fields))

    def _semigroup_checks(self, context: SuiteContext, fields: np.ndarray) -> List[CheckReport]:
        F, L = context.factorization, context.generator
        reports = []
        law, mass, contractive = [], [], []
        for s in (0.1, 0.5):
            for t in (0.1, 0.5):
                gap = heat_apply(F, heat_apply(F, fields, t), s) - heat_apply(F, fields, s + t)
                scale = max(1.0, float(np.max(np.abs(fields))))
                law.append(CheckReport.from_sides("semigroup_law", float(np.max(np.abs(gap))), 0.0, 1e-9 * scale, worst_state=s + t))
        for t in context.config.times.t_list:
            evolved = heat_apply(F, fields, t)
            before = L.m @ fields
            after = L.m @ evolved
            drift = float(np.max(np.abs(after - before)))
            mass.append(
                CheckReport.from_sides("mass_preservation", drift, 0.0, 1e-9 * max(1.0, float(np.max(np.abs(before)))), worst_state=t)
            )
            for j in range(fields.shape[1]):
                contractive.append(
                    CheckReport.from_sides("l2_contractivity", l2_norm(F, evolved[:, j]), l2_norm(F, fields[:, j]), 1e-12, worst_state=t)
                )
        reports.extend([worst_of(law), worst_of(mass), worst_of(contractive)])

        f = fields[:, 0]
        reports.append(mollify_generator_identity(F, L, f, MOLLIFIER_EPSILONS[0]))
        errors = mollification_errors(F, f, MOLLIFIER_EPSILONS)
        increases = [later - earlier for earlier, later in zip(errors, errors[1:])]
        worst = int(np.argmax(increases))
        reports.append(
            CheckReport.from_sides(
                "mollifier_convergence",
                increases[worst],
                0.0,
                1e-12 * max(1.0, errors[0]),
                worst_state=MOLLIFIER_EPSILONS[worst + 1],
            )
        )
        return reports

    def _checks(self, context: SuiteContext) -> List[CheckReport]:
        F, L = context.factorization, context.generator
        settings = context.config.gradient
        K = self.curvature_parameter(context)
        t_list = context.config.times.t_list
        fields = self._fields(context)
        reports = self._semigroup_checks(context, fields)

        by_name = {}
        for j in range(fields.shape[1]):
            rows = gradient_estimate_report(
                F, L, fields[:, j], K, t_list, settings.alpha_list,
                curvature=context.curvature, allowance_constant=settings.allowance_constant,
            )
            rows += dual_gradient_report(
                F, L, fields[:, j], K, t_list, settings.beta_list,
                curvature=context.curvature, allowance_constant=settings.allowance_constant,
            )
            for r in rows:
                by_name.setdefault(r.name, []).append(r)
        reports.extend(worst_of(rows) for rows in by_name.values())
        if context.refined is not None:
            reports.extend(
                gradient_refinement(
                    context.level, context.refined, parse_univariate(settings.test_function), K, t_list,
                    settings.alpha_list, allowance_constant=settings.allowance_constant,
                )
            )
        self.logger.debug(f"Gradient estimates on {fields.shape[1]} fields with K={K:.6g}")
        return reports
