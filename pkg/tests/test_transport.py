"""Tests for transport distances, heat flow of measures and the entropy experiments."""

import math

import numpy as np
import pytest

from src.calculus.core_space import Measure
from src.calculus.errors import GridRequired, SizeMismatch, SizeOverflow, StepTooLarge, UnsortedSupport
from src.calculus.reports import expected_violation
from src.calculus.semigroup import factorize
from src.calculus.transport import (
    INF,
    CostFunction,
    DiscreteMeasure,
    contraction_experiment,
    decay_rate_check,
    density_contraction_check,
    displacement_convexity_check,
    displacement_interpolate,
    entropy,
    evi_check,
    heat_flow_dirac,
    heat_flow_measure,
    initial_measure,
    read_measure,
    read_plan,
    transport_cost_lp,
    wasserstein_1d,
    write_measure,
    write_plan,
)


def _uniform(*positions):
    return DiscreteMeasure.from_masses(positions, np.ones(len(positions)))


def _random_measure(rng, atoms):
    return DiscreteMeasure.from_masses(np.sort(rng.uniform(-3.0, 3.0, atoms)), rng.uniform(0.1, 1.0, atoms))


def _gaussian(positions, centre, width=1.0):
    return DiscreteMeasure.from_masses(positions, np.exp(-0.5 * ((positions - centre) / width) ** 2))


class TestQuantileDistance:
    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0, INF])
    def test_diracs(self, p):
        assert wasserstein_1d(DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(1.0), p) == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [1.0, 2.0, INF])
    def test_translated_uniform(self, p):
        assert wasserstein_1d(_uniform(0.0, 1.0), _uniform(2.0, 3.0), p) == pytest.approx(2.0)

    @pytest.mark.parametrize("p", [1.0, 2.0, INF])
    def test_split_mass(self, p):
        assert wasserstein_1d(_uniform(0.0, 2.0), DiscreteMeasure.dirac(1.0), p) == pytest.approx(1.0)

    def test_identical_measures(self, rng):
        mu = _random_measure(rng, 12)
        for p in (1.0, 2.0, INF):
            assert wasserstein_1d(mu, mu, p) == pytest.approx(0.0, abs=1e-12)

    def test_unsorted_support(self):
        mu = DiscreteMeasure(support=[1.0, 0.0], weights=[0.5, 0.5])
        with pytest.raises(UnsortedSupport):
            wasserstein_1d(mu, DiscreteMeasure.dirac(0.0))

    def test_weights_must_sum_to_one(self):
        with pytest.raises(SizeMismatch):
            DiscreteMeasure(support=[0.0, 1.0], weights=[0.5, 0.6])


class TestLinearProgram:
    def test_quadratic_cost_example(self):
        nu = _uniform(1.0, 3.0)
        value, plan = transport_cost_lp(DiscreteMeasure.dirac(0.0), nu, CostFunction.power(2.0))
        assert value == pytest.approx(5.0)
        np.testing.assert_allclose(plan.dense(), [[0.5, 0.5]])

    def test_bottleneck_cost(self):
        value, _ = transport_cost_lp(_uniform(0.0, 1.0), _uniform(2.0, 3.0), CostFunction.sup())
        assert value == pytest.approx(2.0)

    def test_agrees_with_quantile_coupling(self, rng):
        for _ in range(10):
            mu = _random_measure(rng, int(rng.integers(1, 15)))
            nu = _random_measure(rng, int(rng.integers(1, 15)))
            for p in (1.0, 2.0, 3.0):
                value, plan = transport_cost_lp(mu, nu, CostFunction.power(p))
                assert value == pytest.approx(wasserstein_1d(mu, nu, p) ** p, rel=1e-8, abs=1e-10)
                rows, cols = plan.marginals()
                np.testing.assert_allclose(rows, mu.weights, atol=1e-9)
                np.testing.assert_allclose(cols, nu.weights, atol=1e-9)
            value, _ = transport_cost_lp(mu, nu, CostFunction.sup())
            assert value == pytest.approx(wasserstein_1d(mu, nu, INF), abs=1e-9)

    def test_custom_cost_interpolates(self):
        cost = CostFunction.piecewise([(0.0, 0.0), (1.0, 1.0), (2.0, 1.5)])
        np.testing.assert_allclose(cost([0.5, 1.5, 4.0]), [0.5, 1.25, 1.5])
        assert cost.lipschitz(3.0) == pytest.approx(1.0)
        assert cost.rescaled(2.0)(0.5) == pytest.approx(1.0)

    def test_invalid_costs(self):
        with pytest.raises(SizeMismatch):
            CostFunction.power(0.5)
        with pytest.raises(SizeMismatch):
            CostFunction.piecewise([(0.0, 1.0), (1.0, 0.5)])

    def test_size_limit(self):
        mu = _uniform(*np.linspace(0.0, 1.0, 501))
        with pytest.raises(SizeOverflow):
            transport_cost_lp(mu, DiscreteMeasure.dirac(0.0), CostFunction.power(1.0))


class TestHeatFlowOfMeasures:
    def test_entropy_examples(self):
        m = Measure(weights=[0.5, 0.5])
        assert entropy(_uniform(0.0, 1.0), m) == pytest.approx(0.0)
        assert entropy(DiscreteMeasure(support=[0.0, 1.0], weights=[1.0, 0.0]), m) == pytest.approx(math.log(2.0))

    def test_two_point_dirac(self, two_point):
        mu = heat_flow_dirac(factorize(two_point), 0, math.log(2.0) / 2.0)
        np.testing.assert_allclose(mu.weights, [0.75, 0.25], atol=1e-12)
        np.testing.assert_allclose(mu.support, [0.0, 1.0])

    def test_ou_dirac_moments(self, ou_grid, ou_factorization):
        start = int(np.argmin(np.abs(ou_grid.space.positions - 1.0)))
        mu = heat_flow_dirac(ou_factorization, start, 0.5, ou_grid)
        assert mu.mean == pytest.approx(math.exp(-0.5), rel=0.02)
        assert mu.variance == pytest.approx(1.0 - math.exp(-1.0), rel=0.05)

    def test_ou_translated_solutions(self, ou_grid, ou_factorization):
        x = ou_grid.space.positions
        left = heat_flow_dirac(ou_factorization, int(np.argmin(np.abs(x + 1.0))), 0.5, ou_grid)
        right = heat_flow_dirac(ou_factorization, int(np.argmin(np.abs(x - 1.0))), 0.5, ou_grid)
        expected = 2.0 * math.exp(-0.5)
        assert wasserstein_1d(left, right, 2.0) == pytest.approx(expected, rel=0.02)
        assert wasserstein_1d(left, right, INF) == pytest.approx(expected, abs=0.1)

    def test_stationary_measure_is_invariant(self, ou_grid, ou_factorization):
        nu = initial_measure(ou_grid, "stationary")
        evolved = heat_flow_measure(ou_factorization, nu, 0.8, ou_grid)
        np.testing.assert_allclose(evolved.weights, nu.weights, atol=1e-9)

    def test_unknown_initial_measure(self, ou_grid):
        with pytest.raises(SizeMismatch):
            initial_measure(ou_grid, "bimodal")


class TestContraction:
    def test_fundamental_solutions_contract(self, ou_grid, ou_factorization):
        costs = [CostFunction.piecewise([(0.0, 0.0), (1.0, 1.0), (3.0, 1.5)])]
        reports = contraction_experiment(ou_factorization, ou_grid, 1.0, -1.0, 1.0, [0.25, 1.0], [1.0, 2.0, INF], costs)
        assert reports[-1].name == "heat_kernel_clamp"
        assert len(reports) == 2 * 4 + 1
        assert all(r.passed for r in reports), [r for r in reports if not r.passed]

    def test_densities_contract(self, ou_grid, ou_factorization):
        mu = initial_measure(ou_grid, "shifted:-1")
        nu = initial_measure(ou_grid, "shifted:1")
        reports = density_contraction_check(ou_factorization, ou_grid, 1.0, mu, nu, [0.5, 1.0], [1.0, 2.0])
        assert all(r.passed for r in reports)

    def test_decay_rate(self, ou_grid, ou_factorization):
        report = decay_rate_check(ou_factorization, ou_grid, 1.0, -1.0, 1.0, [0.5, 1.0, 1.5, 2.0], relative_tolerance=0.05)
        assert report.passed, report

    def test_needs_grid(self, two_point):
        with pytest.raises(GridRequired):
            contraction_experiment(factorize(two_point), two_point, 1.0, 0.0, 1.0, [0.5], [1.0])


class TestEvolutionVariationalInequality:
    def test_stationary_start_is_trivial(self, ou_grid, ou_factorization):
        nu = initial_measure(ou_grid, "stationary")
        reports = evi_check(ou_factorization, ou_grid, 1.0, nu, nu, [0.25, 0.5], 0.01)
        for report in reports:
            assert report.passed
            assert report.lhs == pytest.approx(0.0, abs=1e-6)

    def test_shifted_start(self, ou_grid, ou_factorization):
        nu = initial_measure(ou_grid, "stationary")
        reports = evi_check(ou_factorization, ou_grid, 1.0, initial_measure(ou_grid, "shifted:2"), nu, [0.25, 0.5, 1.0], 0.01)
        assert all(r.passed for r in reports)

    def test_overclaimed_curvature_is_caught(self, ou_grid, ou_factorization):
        nu = initial_measure(ou_grid, "stationary")
        reports = evi_check(ou_factorization, ou_grid, 2.0, initial_measure(ou_grid, "shifted:2"), nu, [0.25], 0.01)
        assert not reports[0].passed
        assert reports[0].slack < -reports[0].tolerance
        assert expected_violation("evi_negative_control", reports).passed

    def test_step_too_large(self, ou_grid, ou_factorization):
        nu = initial_measure(ou_grid, "stationary")
        with pytest.raises(StepTooLarge):
            evi_check(ou_factorization, ou_grid, 1.0, nu, nu, [0.25], 0.2)


class TestDisplacementConvexity:
    def test_interpolating_diracs(self):
        mid = displacement_interpolate(DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(2.0), 0.5)
        np.testing.assert_allclose(mid.support, [1.0])

    def test_constant_path(self, ou_grid):
        mu = _gaussian(ou_grid.space.positions, 0.3)
        reports = displacement_convexity_check(ou_grid, mu, mu, 1.0, [0.0, 0.5, 1.0])
        assert all(r.passed for r in reports)

    def test_gaussians_are_convex(self, ou_grid):
        x = ou_grid.space.positions
        reports = displacement_convexity_check(ou_grid, _gaussian(x, -0.5), _gaussian(x, 0.5), 1.0, [0.25, 0.5, 0.75])
        assert [r.name for r in reports[:2]] == ["displacement_convexity", "geodesic_distance"]
        assert all(r.passed for r in reports)

    def test_overclaimed_curvature_is_caught(self, ou_grid):
        x = ou_grid.space.positions
        reports = displacement_convexity_check(ou_grid, _gaussian(x, -1.0), _gaussian(x, 1.0), 2.0, [0.5])
        assert not reports[0].passed


class TestFiles:
    def test_measure_csv(self, tmp_path, rng):
        mu = _random_measure(rng, 7)
        loaded = read_measure(write_measure(mu, tmp_path / "mu.csv"))
        np.testing.assert_array_equal(loaded.support, mu.support)
        np.testing.assert_array_equal(loaded.weights, mu.weights)

    def test_plan_csv(self, tmp_path):
        _, plan = transport_cost_lp(_uniform(0.0, 1.0), _uniform(0.5, 2.0, 3.0), CostFunction.power(2.0))
        loaded = read_plan(write_plan(plan, tmp_path / "plan.csv"), plan.rows, plan.cols)
        np.testing.assert_allclose(loaded.dense(), plan.dense())
