"""Suites run against prepared contexts, and the coordinator around them."""

import asyncio
import math
from pathlib import Path

import pytest

from src.calculus.errors import KExceedsCurvature
from src.suites import SUITES, Coordinator
from src.utils.experiment_config import ExperimentConfig

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="module")
def ou_context():
    config = ExperimentConfig(
        curvature={"K": 1.0},
        times={"t_list": [0.2, 1.0]},
        contraction={"p_list": [1.0, 2.0, math.inf], "decay_times": [0.25, 0.5, 0.75, 1.0]},
        calculus={"corpus_size": 3, "n_samples": 101},
    )
    return Coordinator(config).prepare()


@pytest.fixture(scope="module")
def chain_context():
    config = ExperimentConfig(space={"kind": "chain", "rates_file": str(CONFIGS / "path4.gen")}, gradient={"n_fields": 4})
    return Coordinator(config).prepare()


def _run(name, context):
    return SUITES[name]().run(context)


def _names(result):
    return [r.name for r in result.reports]


class TestGridSuites:
    def test_prepared_context(self, ou_context):
        assert ou_context.generator.n == 201
        assert 0.85 <= ou_context.curvature <= 1.15

    @pytest.mark.parametrize("name", ["curvature", "gradient", "contraction", "evi", "cd"])
    def test_suite_passes(self, ou_context, name):
        result = _run(name, ou_context)
        assert result.success, result.error
        assert result.skipped is None
        failing = [r for r in result.reports if not r.passed]
        assert not failing, failing
        assert all(r.suite == name for r in result.reports)

    def test_refined_level(self, ou_context):
        assert ou_context.refined.generator.n == 401
        assert ou_context.refined.spacing == pytest.approx(0.5 * ou_context.generator.space.spacing)

    def test_refinement_rows(self, ou_context):
        assert "curvature_refinement" in _names(_run("curvature", ou_context))
        gradient = _names(_run("gradient", ou_context))
        assert "gradient_refinement[alpha=0.5]" in gradient
        assert not any(name.startswith("gradient_refinement[alpha=1") for name in gradient)
        assert "contraction_refinement[p=inf]" in _names(_run("contraction", ou_context))

    def test_refinement_can_be_switched_off(self):
        config = ExperimentConfig(run={"refinement": False}, space={"n": 51})
        assert Coordinator(config).prepare().refined is None

    def test_evi_rows(self, ou_context):
        names = _names(_run("evi", ou_context))
        assert names.count("evi") == 3
        assert names.count("evi_shifted") == 3
        assert names[-1] == "evi_negative_control"
        assert "evi_refinement" in names

    def test_cd_control(self, ou_context):
        result = _run("cd", ou_context)
        assert _names(result)[-1] == "cd_negative_control"

    def test_contraction_rows(self, ou_context):
        names = set(_names(_run("contraction", ou_context)))
        assert {"w2_decay_rate", "density_contraction[p=2]", "heat_kernel_clamp"} <= names
        assert "lp_quantile_agreement[p=inf]" in names
        assert "wasserstein_contraction[p=inf]" in names

    def test_gradient_rows(self, ou_context):
        names = _names(_run("gradient", ou_context))
        assert names[:3] == ["semigroup_law", "mass_preservation", "l2_contractivity"]
        assert "gradient_estimate[alpha=0.5,t=1]" in names
        assert "gradient_estimate[beta=2,t=0.2]" in names


class TestChainSuites:
    @pytest.mark.parametrize("name", ["contraction", "evi", "cd"])
    def test_grid_suites_skip(self, chain_context, name):
        result = _run(name, chain_context)
        assert result.success
        assert result.skipped == "requires a grid space"
        assert result.reports == []

    def test_chain_has_no_refined_level(self, chain_context):
        assert chain_context.refined is None

    def test_curvature_suite(self, chain_context):
        result = _run("curvature", chain_context)
        assert result.success, result.error
        assert result.failures == 0
        assert "curvature_schur_agreement" in _names(result)
        assert "curvature_sampled_agreement" in _names(result)

    def test_gradient_suite_on_chain(self, chain_context):
        result = _run("gradient", chain_context)
        assert result.failures == 0
        assert not any("alpha=0.5" in name for name in _names(result))

    def test_seeded_reports_repeat(self, chain_context):
        first = _run("curvature", chain_context)
        second = _run("curvature", chain_context)
        assert [r.to_row() for r in first.reports] == [r.to_row() for r in second.reports]


class TestCoordinator:
    def test_run_orders_results(self):
        config = ExperimentConfig(run={"suites": "calculus"}, calculus={"corpus_size": 2, "n_samples": 51})
        output = asyncio.run(Coordinator(config).run())
        assert [r.suite_name for r in output.results] == ["calculus"]
        assert output.success
        assert output.curvature is not None

    def test_failed_preparation_marks_every_suite(self):
        config = ExperimentConfig(
            run={"suites": "gradient, cd"},
            space={"a": -100.0, "b": 100.0, "n": 11, "potential": "x^2"},
        )
        output = asyncio.run(Coordinator(config).run())
        assert [r.suite_name for r in output.results] == ["cd", "gradient"]
        assert not output.success
        assert all(r.error and r.error.startswith("PotentialOverflow") for r in output.results)

    def test_overclaimed_curvature_is_a_suite_error(self):
        config = ExperimentConfig(run={"suites": "gradient"}, curvature={"K": 3.0}, space={"n": 101})
        output = asyncio.run(Coordinator(config).run())
        assert not output.success
        assert KExceedsCurvature.__name__ in output.results[0].error
