"""Exact polynomial checks of the calculus rules and pointwise estimates."""

from collections import OrderedDict
from typing import List

from src.calculus.poly_exact import (
    verify_bochner,
    verify_calculus_rules,
    verify_fundamental_identity,
    verify_h_expression,
    verify_theorem_estimates,
)
from src.calculus.polynomials import (
    MultivariatePoly,
    random_composition,
    random_polynomial,
    random_potential,
    univariate,
)
from src.calculus.reports import CheckReport, worst_of
from src.suites.base_suite import BaseSuite, SuiteContext


class CalculusSuite(BaseSuite):
    """Runs every model-space identity and estimate over a seeded polynomial corpus."""

    def __init__(self, verbose: bool = False):
        super().__init__("calculus", verbose)

    def _checks(self, context: SuiteContext) -> List[CheckReport]:
        settings = context.config.calculus
        rng = self.rng(context)
        interval = settings.interval
        by_name: "OrderedDict[str, List[CheckReport]]" = OrderedDict()

        def collect(k: int, reports: List[CheckReport]) -> None:
            for r in reports:
                by_name.setdefault(r.name, []).append(r.model_copy(update={"worst_state": f"tuple{k}@{r.worst_state}"}))

        for k in range(settings.corpus_size):
            K = float(rng.uniform(-1.0, 2.0))
            V = random_potential(rng, K)
            f, g, h = (random_polynomial(rng) for _ in range(3))
            phi = random_composition(rng, 3)
            psi = random_composition(rng, 3)
            collect(k, verify_calculus_rules([f, g, h], V, phi, psi, interval))
            collect(k, [verify_fundamental_identity([f, g, h], V, phi, interval)])
            collect(k, [verify_bochner(V, f, g, interval), verify_h_expression(f, g, h, interval)])
            collect(k, verify_theorem_estimates(f, g, h, V, K, interval, settings.n_samples))

            # the polynomial that yields the Hessian bound
            lam, a, b = (float(v) for v in rng.uniform(-2.0, 2.0, size=3))
            hessian_phi = MultivariatePoly(
                nvars=3,
                terms={(1, 0, 0): lam, (0, 1, 1): 1.0, (0, 1, 0): -b, (0, 0, 1): -a},
            )
            monomials = [univariate([0, 1]), univariate([0, 0, 1]), univariate([0, 0, 0, 1])]
            report = verify_fundamental_identity(monomials, V, hessian_phi, interval)
            collect(k, [report.model_copy(update={"name": "fundamental_identity_hessian_polynomial"})])

        self.logger.debug(f"Checked {settings.corpus_size} polynomial tuples, {len(by_name)} identities")
        return [worst_of(reports) for reports in by_name.values()]
