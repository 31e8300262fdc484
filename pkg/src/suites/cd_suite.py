"""Displacement convexity of the entropy between Gaussian endpoints."""

from typing import List

import numpy as np

from src.calculus.reports import CheckReport, expected_violation
from src.calculus.transport import DiscreteMeasure, displacement_convexity_check
from src.suites.base_suite import BaseSuite, SuiteContext


class CdSuite(BaseSuite):
    """K-convexity of Ent along quantile interpolation, with a K + 1 control."""

    requires_grid = True

    def __init__(self, verbose: bool = False):
        super().__init__("cd", verbose)

    def _checks(self, context: SuiteContext) -> List[CheckReport]:
        L = context.generator
        settings = context.config.cd
        K = self.curvature_parameter(context)
        positions = np.array(L.space.positions)

        def gaussian(center: float) -> DiscreteMeasure:
            return DiscreteMeasure.from_masses(positions, np.exp(-0.5 * ((positions - center) / settings.width) ** 2))

        mu0, mu1 = (gaussian(c) for c in settings.centers)
        reports = displacement_convexity_check(L, mu0, mu1, K, settings.t_list)

        # translated Gaussians are an equality case; skipped when the endpoints coincide
        interior = [t for t in settings.t_list if 0.0 < t < 1.0]
        if interior and settings.centers[0] != settings.centers[1]:
            over_claimed = [
                r for r in displacement_convexity_check(L, mu0, mu1, K + 1.0, interior) if r.name == "displacement_convexity"
            ]
            reports.append(expected_violation("cd_negative_control", over_claimed))
        return reports
