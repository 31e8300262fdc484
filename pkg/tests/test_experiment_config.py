"""Tests for loading and validating experiment configurations."""

import math
from pathlib import Path

import pytest

from src.calculus.errors import ConfigParse
from src.config import SUITE_NAMES
from src.utils.experiment_config import ExperimentConfig, load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, text, name="experiment.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestBundledConfigs:
    def test_ou_grid(self):
        config = load_config(CONFIGS / "ou_grid.ini")
        assert config.space.kind == "grid"
        assert config.space.n == 201
        assert config.curvature.K == 1.0
        assert config.run.suites == sorted(SUITE_NAMES)

    def test_chain_resolves_rates_file(self):
        config = load_config(CONFIGS / "chain.ini")
        assert config.space.kind == "chain"
        assert Path(config.space.rates_file) == CONFIGS / "path4.gen"
        assert config.curvature.K == "auto"

    def test_malformed_names_the_field(self):
        with pytest.raises(ConfigParse, match="gradient.alpha_list"):
            load_config(CONFIGS / "malformed.ini")


class TestDefaults:
    def test_empty_file_gives_defaults(self, tmp_path):
        config = load_config(_write(tmp_path, ""))
        assert config == ExperimentConfig(source=config.source)
        assert config.contraction.p_list[-1] == math.inf
        assert config.evi.mu0 == "left_half"
        assert config.cd.centers == (-1.0, 1.0)

    def test_lists_and_pairs_are_parsed(self, tmp_path):
        text = "\n".join(
            [
                "[contraction]",
                "pairs = -1:1, 0:2.5",
                "p_list = 1, 2, inf",
                "cost_breakpoints = 0:0, 1:2",
                "[times]",
                "t_list = 0.1, 0.5",
            ]
        )
        config = load_config(_write(tmp_path, text))
        assert config.contraction.pairs == [(-1.0, 1.0), (0.0, 2.5)]
        assert config.contraction.p_list == [1.0, 2.0, math.inf]
        assert config.times.t_list == [0.1, 0.5]

    def test_duplicate_suites(self, tmp_path):
        config = load_config(_write(tmp_path, "[run]\nsuites = gradient, cd, gradient\n"))
        assert config.run.suites == ["cd", "gradient"]


class TestRejected:
    @pytest.mark.parametrize(
        "text, field",
        [
            ("[run]\nsuites = gradient, entropy\n", "run.suites"),
            ("[times]\nt_list = 1, 0.5\n", "times.t_list"),
            ("[gradient]\nbeta_list = 0.5\n", "gradient.beta_list"),
            ("[contraction]\np_list = 0.5\n", "contraction.p_list"),
            ("[contraction]\npairs = 1\n", "contraction.pairs"),
            ("[evi]\ndelta = 0.2\nt_list = 0.25\n", "evi"),
            ("[evi]\nmu0 = bimodal\n", "evi.mu0"),
            ("[cd]\nt_list = 0.5, 1.5\n", "cd.t_list"),
            ("[space]\na = 1\nb = -1\n", "space"),
            ("[space]\nkind = chain\n", "space"),
            ("[space]\nwidth = 3\n", "space.width"),
        ],
    )
    def test_invalid_values(self, tmp_path, text, field):
        with pytest.raises(ConfigParse, match=f"invalid field '{field}'"):
            load_config(_write(tmp_path, text))

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigParse, match="unknown section"):
            load_config(_write(tmp_path, "[plots]\ndpi = 300\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigParse):
            load_config(tmp_path / "absent.ini")

    def test_missing_rates_file(self, tmp_path):
        with pytest.raises(ConfigParse, match="space.rates_file"):
            load_config(_write(tmp_path, "[space]\nkind = chain\nrates_file = nowhere.gen\n"))
