"""Tests for the heat semigroup, mollification and gradient estimates."""

import math

import numpy as np
import pytest

from src.calculus.core_space import integrate
from src.calculus.errors import AlphaOutOfRange, KExceedsCurvature, NegativeTime, NonpositiveEpsilon, SizeMismatch
from src.calculus.gamma_calculus import curvature_global
from src.calculus.semigroup import (
    dual_gradient_report,
    factorize,
    gradient_estimate_report,
    heat_apply,
    integrated_rate,
    l2_norm,
    mollification_errors,
    mollify,
    mollify_generator_identity,
)


class TestFactorization:
    def test_two_point_spectrum(self, two_point):
        np.testing.assert_allclose(factorize(two_point).eigenvalues, [-2.0, 0.0], atol=1e-12)

    def test_path_spectrum(self, path3):
        np.testing.assert_allclose(factorize(path3).eigenvalues, [-3.0, -1.0, 0.0], atol=1e-12)

    def test_eigenvectors_orthonormal_in_weighted_product(self, random_chains):
        for L in random_chains:
            Q = factorize(L).eigenvectors
            np.testing.assert_allclose(Q.T @ (L.m[:, None] * Q), np.eye(L.n), atol=1e-9)

    def test_propagator_is_stochastic(self, random_chains):
        for L in random_chains:
            P = factorize(L).propagator(0.7)
            np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-10)
            assert P.min() >= -1e-10


class TestHeatFlow:
    def test_two_point_closed_form(self, two_point):
        F = factorize(two_point)
        np.testing.assert_allclose(heat_apply(F, [0.0, 1.0], math.log(2.0) / 2.0), [0.25, 0.75], atol=1e-12)

    def test_time_zero_is_identity(self, path3):
        f = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(heat_apply(factorize(path3), f, 0.0), f)

    def test_semigroup_law(self, random_chains, rng):
        for L in random_chains:
            F = factorize(L)
            f = rng.standard_normal(L.n)
            np.testing.assert_allclose(heat_apply(F, heat_apply(F, f, 0.3), 0.4), heat_apply(F, f, 0.7), atol=1e-10)

    def test_mass_preserved_and_contractive(self, random_chains, rng):
        for L in random_chains:
            F = factorize(L)
            f = rng.standard_normal(L.n)
            pf = heat_apply(F, f, 1.3)
            assert integrate(L, pf) == pytest.approx(integrate(L, f), abs=1e-10)
            assert l2_norm(F, pf) <= l2_norm(F, f) + 1e-12

    def test_ou_linear_field_decays(self, ou_grid, ou_factorization):
        x = ou_grid.space.positions
        pf = heat_apply(ou_factorization, x, 0.5)
        inside = np.abs(x) <= 1.0
        np.testing.assert_allclose(pf[inside], math.exp(-0.5) * x[inside], atol=1e-2)

    def test_negative_time(self, two_point):
        with pytest.raises(NegativeTime):
            heat_apply(factorize(two_point), [0.0, 1.0], -0.1)

    @pytest.mark.parametrize("t", [0.0, 0.5])
    def test_wrong_length_field(self, two_point, t):
        with pytest.raises(SizeMismatch):
            heat_apply(factorize(two_point), [0.0, 1.0, 2.0], t)


class TestMollifier:
    def test_preserves_mass(self, random_chains, rng):
        for L in random_chains:
            F = factorize(L)
            f = rng.standard_normal(L.n)
            assert integrate(L, mollify(F, f, 0.2)) == pytest.approx(integrate(L, f), abs=1e-9)

    def test_constants_fixed(self, path3):
        np.testing.assert_allclose(mollify(factorize(path3), np.full(3, 2.0), 0.5), 2.0, atol=1e-9)

    def test_generator_identity(self, random_chains, rng):
        for L in random_chains:
            F = factorize(L)
            for eps in (0.1, 0.5):
                assert mollify_generator_identity(F, L, rng.standard_normal(L.n), eps).passed

    def test_errors_shrink_with_epsilon(self, path3):
        errors = mollification_errors(factorize(path3), [0.0, 1.0, 4.0], [1e-1, 1e-2, 1e-3])
        assert errors[0] > errors[1] > errors[2] >= 0.0

    def test_nonpositive_epsilon(self, two_point):
        with pytest.raises(NonpositiveEpsilon):
            mollify(factorize(two_point), [0.0, 1.0], 0.0)


class TestGradientEstimates:
    def test_integrated_rate(self):
        assert integrated_rate(0.0, 0.4) == 0.4
        assert integrated_rate(1.0, 0.5) == pytest.approx((math.e - 1.0) / 2.0)
        assert integrated_rate(-1.0, 0.5) == pytest.approx((1.0 - math.exp(-1.0)) / 2.0)

    def test_two_point_equality_at_curvature(self, two_point):
        reports = gradient_estimate_report(factorize(two_point), two_point, [0.0, 1.0], 2.0, [0.1, 0.5], [1.0])
        assert [r.name for r in reports] == [
            "gradient_estimate[alpha=1,t=0.1]",
            "gradient_estimate[alpha=1,t=0.5]",
            "variance_gradient_estimate[t=0.1]",
            "variance_gradient_estimate[t=0.5]",
        ]
        for report in reports:
            assert report.passed
            assert report.slack == pytest.approx(0.0, abs=1e-10)
        variance = reports[-1]
        assert variance.rhs == pytest.approx(0.25 * (1.0 - math.exp(-2.0)), abs=1e-12)

    def test_sublinear_alpha_skipped_on_chains(self, path3):
        reports = gradient_estimate_report(factorize(path3), path3, [0.0, 1.0, 4.0], -1.0, [0.5], [0.5, 1.0])
        assert [r.name for r in reports] == ["gradient_estimate[alpha=1,t=0.5]", "variance_gradient_estimate[t=0.5]"]

    def test_random_chains_at_global_curvature(self, random_chains, rng):
        for L in random_chains[:8]:
            K = curvature_global(L)
            reports = gradient_estimate_report(factorize(L), L, rng.standard_normal(L.n), K, [0.0, 0.3, 1.0], [1.0], curvature=K)
            assert all(r.passed for r in reports), [r for r in reports if not r.passed]

    def test_ou_grid_all_exponents(self, ou_grid, ou_factorization):
        f = np.tanh(ou_grid.space.positions)
        reports = gradient_estimate_report(ou_factorization, ou_grid, f, 1.0, [0.1, 0.5], [0.5, 0.75, 1.0])
        assert len(reports) == 8
        assert all(r.passed for r in reports)

    def test_dual_form_names(self, ou_grid, ou_factorization):
        f = np.tanh(ou_grid.space.positions)
        reports = dual_gradient_report(ou_factorization, ou_grid, f, 1.0, [0.5], [1.0, 2.0])
        assert [r.name for r in reports] == ["gradient_estimate[beta=1,t=0.5]", "gradient_estimate[beta=2,t=0.5]"]
        assert all(r.passed for r in reports)

    def test_alpha_out_of_range(self, two_point):
        with pytest.raises(AlphaOutOfRange):
            gradient_estimate_report(factorize(two_point), two_point, [0.0, 1.0], 1.0, [0.1], [0.4])

    def test_k_above_curvature(self, two_point):
        with pytest.raises(KExceedsCurvature):
            gradient_estimate_report(factorize(two_point), two_point, [0.0, 1.0], 2.5, [0.1], [1.0])
