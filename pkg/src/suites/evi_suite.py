"""Evolution variational inequality along the heat flow of measures."""

from typing import List

from src.calculus.reports import CheckReport, expected_violation
from src.calculus.refinement import evi_refinement
from src.calculus.transport import evi_check, initial_measure
from src.suites.base_suite import BaseSuite, SuiteContext


class EviSuite(BaseSuite):
    """EVI at K for the configured data and a shifted Gaussian, plus the K + 1 control."""

    requires_grid = True

    def __init__(self, verbose: bool = False):
        super().__init__("evi", verbose)

    def _checks(self, context: SuiteContext) -> List[CheckReport]:
        F, L = context.factorization, context.generator
        settings = context.config.evi
        K = self.curvature_parameter(context)
        nu = initial_measure(L, "stationary")

        reports = evi_check(F, L, K, initial_measure(L, settings.mu0), nu, settings.t_list, settings.delta)

        shifted = initial_measure(L, f"shifted:{settings.shift:g}")
        reports += [
            r.model_copy(update={"name": "evi_shifted"})
            for r in evi_check(F, L, K, shifted, nu, settings.t_list, settings.delta)
        ]

        if context.refined is not None:
            reports.append(evi_refinement(context.level, context.refined, K, settings.mu0, settings.t_list, settings.delta))

        if settings.negative_control:
            # the shifted Gaussian is an equality case, so K + 1 must be detected
            over_claimed = evi_check(F, L, K + 1.0, shifted, nu, settings.t_list, settings.delta)
            control = expected_violation("evi_negative_control", over_claimed)
            self.logger.info(f"Negative control at K={K + 1.0:.6g}: violation {control.rhs:.4g} against allowance {control.lhs:.4g}")
            reports.append(control)
        return reports
