"""Pointwise curvature: pencil bisection against independent oracles."""

from typing import List

import numpy as np

from src.calculus.gamma_calculus import (
    CurvatureBound,
    be_certificate_check,
    curvature_at,
    curvature_brute_force,
    curvature_global,
    curvature_schur,
    energy_bound_check,
    gamma2,
    gamma_matrices,
)
from src.calculus.polynomials import parse_univariate
from src.calculus.reports import CheckReport, worst_of
from src.calculus.refinement import curvature_refinement
from src.suites.base_suite import BaseSuite, SuiteContext

# the random-field oracle is only run on small chains
BRUTE_FORCE_MAX_STATES = 12


def _finite(value) -> bool:
    return not isinstance(value, CurvatureBound)


class CurvatureSuite(BaseSuite):
    """Curvature per state, cross-checked and used in the weak and energy inequalities."""

    def __init__(self, verbose: bool = False):
        super().__init__("curvature", verbose)

    def _checks(self, context: SuiteContext) -> List[CheckReport]:
        L = context.generator
        rng = self.rng(context)
        reports: List[CheckReport] = []

        assembly, agreement = [], []
        for x in range(L.n):
            pair = gamma_matrices(L, x)
            basis = np.zeros((L.n, len(pair.indices)))
            basis[pair.indices, np.arange(len(pair.indices))] = 1.0
            # Gamma_2(e_i + e_j) - Gamma_2(e_i) - Gamma_2(e_j) = 2 Gamma_2(e_i, e_j)
            k = basis.shape[1]
            diag = gamma2(L, basis)[x]
            sums = (basis[:, :, None] + basis[:, None, :]).reshape(L.n, k * k)
            mixed = gamma2(L, sums)[x].reshape(k, k)
            expected = 0.5 * (mixed - diag[:, None] - diag[None, :])
            residual = float(np.max(np.abs(expected - pair.A), initial=0.0))
            scale = max(1.0, float(np.max(np.abs(pair.A), initial=0.0)))
            assembly.append(CheckReport.from_sides("gamma2_form_assembly", residual, 0.0, 1e-9 * scale, worst_state=x))

            bisected, exact = curvature_at(L, x), curvature_schur(L, x)
            if _finite(bisected) and _finite(exact):
                tolerance = 1e-6 * max(1.0, abs(exact))
                agreement.append(
                    CheckReport.from_sides("curvature_schur_agreement", abs(bisected - exact), 0.0, tolerance, worst_state=x)
                )
            elif bisected != exact:
                shown = bisected.value if not _finite(bisected) else f"{bisected:.6g}"
                agreement.append(
                    CheckReport.from_sides("curvature_schur_agreement", 1.0, 0.0, 0.0, worst_state=f"{x}:{shown}")
                )
        reports.extend(r for r in (worst_of(assembly), worst_of(agreement)) if r is not None)

        if context.refined is not None:
            potential = parse_univariate(context.config.space.potential)
            fraction = context.config.curvature.interior_fraction
            reports.append(curvature_refinement(context.level, context.refined, potential, fraction))

        if L.n <= BRUTE_FORCE_MAX_STATES:
            brute = []
            for x in range(L.n):
                bisected = curvature_at(L, x)
                if not _finite(bisected):
                    continue
                sampled = curvature_brute_force(L, x, rng)
                tolerance = 1e-6 * max(1.0, abs(bisected))
                brute.append(
                    CheckReport.from_sides("curvature_sampled_agreement", abs(sampled - bisected), 0.0, tolerance, worst_state=x)
                )
            if brute:
                reports.append(worst_of(brute))

        K = curvature_global(L)
        if not _finite(K):
            self.logger.warning(f"Global curvature is {K.value}; skipping weak and energy inequalities")
            return reports
        self.logger.info(f"Global curvature {K:.6g}")
        section = context.config.curvature
        fields = rng.standard_normal((L.n, section.certificate_fields))
        weights = rng.uniform(0.0, 1.0, size=(L.n, section.certificate_weights))
        reports.append(be_certificate_check(L, K, fields, weights))
        energy = rng.standard_normal((L.n, section.energy_fields))
        reports.append(worst_of([energy_bound_check(L, energy[:, j], K) for j in range(energy.shape[1])]))
        return reports
