"""Tests for state spaces, measures and reversible generators."""

from pathlib import Path

import numpy as np
import pytest

from src.calculus.core_space import (
    Measure,
    StateSpace,
    apply,
    build_chain,
    build_weighted_grid,
    dirichlet_energy,
    inner,
    integrate,
    random_chain,
    read_generator,
    write_generator,
)
from src.calculus.errors import (
    DegenerateGrid,
    DetailedBalanceViolation,
    NegativeRate,
    NonpositiveMass,
    PotentialOverflow,
    RowSumViolation,
    SizeMismatch,
)
from src.calculus.polynomials import parse_univariate, univariate

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


class TestBuildChain:
    def test_two_point_symmetric_is_valid(self, two_point):
        assert two_point.n == 2
        np.testing.assert_allclose(two_point.m, [0.5, 0.5])
        assert two_point.space.positions is None

    def test_detailed_balance_violation(self):
        with pytest.raises(DetailedBalanceViolation):
            build_chain(StateSpace(n=2), Measure(weights=[0.5, 0.5]), [[-1.0, 1.0], [2.0, -2.0]])

    def test_three_point_path_is_valid(self, path3):
        np.testing.assert_allclose(path3.rates.sum(axis=1), 0.0)
        assert list(path3.neighbours(1)) == [0, 2]

    def test_row_sum_violation(self):
        with pytest.raises(RowSumViolation):
            build_chain(StateSpace(n=2), Measure(weights=[1.0, 1.0]), [[-1.0, 1.5], [1.5, -1.5]])

    def test_negative_rate(self):
        rates = [[0.0, 0.0, 0.0], [0.0, 1.0, -1.0], [0.0, -1.0, 1.0]]
        with pytest.raises(NegativeRate):
            build_chain(StateSpace(n=3), Measure(weights=[1.0, 1.0, 1.0]), rates)

    def test_zero_mass_rejected(self):
        with pytest.raises(NonpositiveMass):
            Measure(weights=[1.0, 0.0])

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            build_chain(StateSpace(n=3), Measure(weights=[1.0, 1.0]), np.zeros((3, 3)))

    def test_single_state_rejected(self):
        with pytest.raises(SizeMismatch):
            StateSpace(n=1)

    def test_unsorted_positions_rejected(self):
        with pytest.raises(DegenerateGrid):
            StateSpace(n=3, positions=[0.0, 2.0, 1.0])

    def test_random_chains_are_reversible(self, random_chains):
        for L in random_chains:
            flux = L.m[:, None] * L.rates
            np.testing.assert_allclose(flux, flux.T, atol=1e-12)


class TestWeightedGrid:
    def test_flat_potential_stencil(self):
        L = build_weighted_grid(0.0, 2.0, 3, univariate([0.0]))
        np.testing.assert_allclose(L.m, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(L.rates, [[-1.0, 1.0, 0.0], [1.0, -2.0, 1.0], [0.0, 1.0, -1.0]])
        assert L.space.spacing == pytest.approx(1.0)

    def test_constant_potential_gives_same_rates(self):
        flat = build_weighted_grid(0.0, 2.0, 3, univariate([0.0]))
        shifted = build_weighted_grid(0.0, 2.0, 3, univariate([3.0]))
        np.testing.assert_allclose(shifted.rates, flat.rates, atol=1e-12)

    def test_ou_grid_is_reversible(self, ou_grid):
        flux = ou_grid.m[:, None] * ou_grid.rates
        np.testing.assert_allclose(flux, flux.T, rtol=1e-10, atol=1e-12)
        assert ou_grid.space.spacing == pytest.approx(0.05)

    def test_degenerate_grid(self):
        with pytest.raises(DegenerateGrid):
            build_weighted_grid(1.0, 1.0, 5, univariate([0.0]))
        with pytest.raises(DegenerateGrid):
            build_weighted_grid(0.0, 1.0, 2, univariate([0.0]))

    def test_potential_overflow(self):
        with pytest.raises(PotentialOverflow):
            build_weighted_grid(-100.0, 100.0, 11, parse_univariate("x^2"))


class TestFields:
    def test_apply_two_point(self, two_point):
        np.testing.assert_allclose(apply(two_point, [0.0, 1.0]), [1.0, -1.0])

    def test_apply_path(self, path3):
        np.testing.assert_allclose(apply(path3, [0.0, 1.0, 4.0]), [1.0, 2.0, -3.0])

    def test_constants_are_harmonic(self, random_chains):
        for L in random_chains:
            np.testing.assert_allclose(apply(L, np.full(L.n, 3.0)), 0.0, atol=1e-12)

    def test_generator_is_self_adjoint(self, random_chains, rng):
        for L in random_chains:
            f, g = rng.standard_normal((2, L.n))
            assert inner(L, f, apply(L, g)) == pytest.approx(inner(L, apply(L, f), g), abs=1e-10)

    def test_dirichlet_energy_nonnegative(self, random_chains, rng):
        for L in random_chains:
            f = rng.standard_normal(L.n)
            assert dirichlet_energy(L, f) >= -1e-12
            assert integrate(L, apply(L, f)) == pytest.approx(0.0, abs=1e-10)

    def test_wrong_length_field(self, two_point):
        with pytest.raises(SizeMismatch):
            apply(two_point, [1.0, 2.0, 3.0])


class TestGeneratorFile:
    def test_chain_file_round_trip(self, random_chains, tmp_path):
        L = random_chains[0]
        loaded = read_generator(write_generator(L, tmp_path / "chain.gen"))
        np.testing.assert_allclose(loaded.rates, L.rates, rtol=1e-15)
        np.testing.assert_allclose(loaded.m, L.m, rtol=1e-15)
        assert loaded.space.positions is None

    def test_grid_keeps_positions(self, tmp_path):
        L = build_weighted_grid(-1.0, 1.0, 9, parse_univariate("x^2"))
        loaded = read_generator(write_generator(L, tmp_path / "grid.gen"))
        np.testing.assert_allclose(loaded.space.positions, L.space.positions)

    def test_bundled_chain_config_file(self):
        L = read_generator(CONFIGS / "path4.gen")
        assert L.n == 4
        np.testing.assert_allclose(L.m, [1.0, 2.0, 2.0, 1.0])

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.gen"
        path.write_text("4\n")
        with pytest.raises(SizeMismatch):
            read_generator(path)

    @pytest.mark.parametrize(
        "text",
        [
            "2 1\n0 nan\n1 nan 0.5\n0 1 1\n1 0 1\n",
            "2 1\n0 nan 0.5\n1 nan 0.5\n0 1\n",
            "2 1\n0 nan half\n1 nan 0.5\n",
            "2 1\n0 nan 0.5\n5 nan 0.5\n",
            "2 1\n0 nan 0.5\n1 nan 0.5\n0 7 1\n",
            "2 1\n0 nan 0.5\n0 nan 0.5\n",
        ],
        ids=["short_state", "short_rate", "bad_number", "state_out_of_range", "rate_out_of_range", "missing_state"],
    )
    def test_malformed_lines(self, tmp_path, text):
        path = tmp_path / "bad.gen"
        path.write_text(text)
        with pytest.raises(SizeMismatch):
            read_generator(path)

    def test_header_total_must_match_weights(self, tmp_path):
        path = tmp_path / "bad.gen"
        path.write_text("2 3\n0 nan 0.5\n1 nan 0.5\n0 0 -1\n0 1 1\n1 0 1\n1 1 -1\n")
        with pytest.raises(SizeMismatch, match="m_total"):
            read_generator(path)


def test_random_chain_seeded():
    a = random_chain(6, np.random.default_rng(3))
    b = random_chain(6, np.random.default_rng(3))
    np.testing.assert_array_equal(a.rates, b.rates)
