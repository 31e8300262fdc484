"""Experiment configuration: INI sections validated into pydantic models."""

import configparser
import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.config import DEFAULT_OUTPUT_DIR, DEFAULT_SEED, SUITE_NAMES, get_logger
from src.calculus.errors import ConfigParse

logger = get_logger(__name__)


def _split(value):
    """Comma-separated strings become lists; other values pass through."""
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def _floats(value):
    """Comma-separated numbers (``inf`` allowed) become a list of floats."""
    items = _split(value)
    if isinstance(items, list):
        return [float(item) if isinstance(item, str) else item for item in items]
    return items


def _pairs(value):
    """``a:b, c:d`` becomes [(a, b), (c, d)]."""
    items = _split(value)
    if isinstance(items, list) and items and isinstance(items[0], str):
        out = []
        for item in items:
            left, sep, right = item.partition(":")
            if not sep:
                raise ValueError(f"expected 'a:b', got {item!r}")
            out.append((float(left), float(right)))
        return out
    return items


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RunSection(Section):
    suites: List[str] = Field(description="Suites to run, or 'all'", default_factory=lambda: list(SUITE_NAMES))
    seed: int = Field(description="Seed of every randomised corpus", default=DEFAULT_SEED)
    output_dir: str = Field(description="Directory for report.csv and summary.txt", default=DEFAULT_OUTPUT_DIR)
    refinement: bool = Field(description="On grids, also rerun the discretised checks at half the step", default=True)

    @field_validator("suites", mode="before")
    @classmethod
    def _expand(cls, value):
        value = _split(value)
        if value == ["all"]:
            return list(SUITE_NAMES)
        return value

    @field_validator("suites")
    @classmethod
    def _known(cls, value: List[str]) -> List[str]:
        unknown = sorted(set(value) - set(SUITE_NAMES))
        if unknown:
            raise ValueError(f"unknown suites {unknown}; choose from {list(SUITE_NAMES)}")
        return sorted(set(value))


class SpaceSection(Section):
    kind: Literal["grid", "chain"] = Field(description="Weighted grid diffusion or a chain read from rates_file", default="grid")
    a: float = Field(description="Left endpoint of the grid", default=-5.0)
    b: float = Field(description="Right endpoint of the grid", default=5.0)
    n: int = Field(description="Number of grid nodes", default=201, ge=3)
    potential: str = Field(description="Potential V as a polynomial in x", default="0.5*x^2")
    rates_file: Optional[str] = Field(description="Generator file for chain spaces", default=None)

    @model_validator(mode="after")
    def _consistent(self) -> "SpaceSection":
        if self.kind == "grid" and not self.a < self.b:
            raise ValueError(f"a = {self.a} must be below b = {self.b}")
        if self.kind == "chain" and not self.rates_file:
            raise ValueError("rates_file is required for chain spaces")
        return self


class CurvatureSection(Section):
    K: Union[Literal["auto"], float] = Field(description="Curvature used by the estimates, 'auto' for the computed one", default="auto")
    interior_fraction: float = Field(description="Boundary layer excluded from grid curvature", default=0.1, gt=0.0, lt=0.5)
    certificate_fields: int = Field(description="Random fields f in the weak Bakry-Emery certificate", default=200, ge=1)
    certificate_weights: int = Field(description="Random nonnegative weights phi in the certificate", default=20, ge=1)
    energy_fields: int = Field(description="Random fields in the Gamma energy bound", default=100, ge=1)


def _ascending_positive(value: List[float], name: str) -> List[float]:
    if not value:
        raise ValueError(f"{name} must not be empty")
    if value[0] <= 0 or any(b <= a for a, b in zip(value, value[1:])):
        raise ValueError(f"{name} must be positive and strictly ascending")
    return value


class TimesSection(Section):
    t_list: List[float] = Field(description="Times of the semigroup and contraction checks", default_factory=lambda: [0.05, 0.2, 1.0, 5.0])

    @field_validator("t_list", mode="before")
    @classmethod
    def _parse_numbers(cls, value):
        return _floats(value)

    @field_validator("t_list")
    @classmethod
    def _check(cls, value: List[float]) -> List[float]:
        return _ascending_positive(value, "t_list")


class GradientSection(Section):
    alpha_list: List[float] = Field(description="Exponents of the self-improved estimate, in [1/2, 1]", default_factory=lambda: [0.5, 0.75, 1.0])
    beta_list: List[float] = Field(description="Exponents of the dual gradient form, in [1, 2]", default_factory=lambda: [1.0, 2.0])
    allowance_constant: float = Field(description="C in the grid allowance C h", default=10.0, ge=0.0)
    n_fields: int = Field(description="Random test fields per chain", default=20, ge=1)
    test_function: str = Field(description="Test field on grids, a polynomial in x", default="x")

    @field_validator("alpha_list", "beta_list", mode="before")
    @classmethod
    def _parse_numbers(cls, value):
        return _floats(value)

    @field_validator("alpha_list")
    @classmethod
    def _alpha(cls, value: List[float]) -> List[float]:
        if any(not 0.5 <= a <= 1.0 for a in value):
            raise ValueError(f"alpha_list {value} must lie in [0.5, 1]")
        return value

    @field_validator("beta_list")
    @classmethod
    def _beta(cls, value: List[float]) -> List[float]:
        if any(not 1.0 <= b <= 2.0 for b in value):
            raise ValueError(f"beta_list {value} must lie in [1, 2]")
        return value


class ContractionSection(Section):
    pairs: List[Tuple[float, float]] = Field(description="Starting points x:y of the fundamental solutions", default_factory=lambda: [(-1.0, 1.0)])
    p_list: List[float] = Field(description="Wasserstein exponents in [1, inf]", default_factory=lambda: [1.0, 2.0, 3.0, math.inf])
    cost_breakpoints: List[Tuple[float, float]] = Field(
        description="Breakpoints r:h(r) of a nondecreasing custom cost; empty to skip",
        default_factory=lambda: [(0.0, 0.0), (1.0, 1.0)],
    )
    decay_times: List[float] = Field(description="Times for the W2 decay-rate fit", default_factory=lambda: [0.1, 0.25, 0.5, 0.75, 1.0])

    @field_validator("p_list", "decay_times", mode="before")
    @classmethod
    def _parse_numbers(cls, value):
        return _floats(value)

    @field_validator("pairs", "cost_breakpoints", mode="before")
    @classmethod
    def _parse_pairs(cls, value):
        return _pairs(value)

    @field_validator("p_list")
    @classmethod
    def _p(cls, value: List[float]) -> List[float]:
        if any(not p >= 1.0 for p in value):
            raise ValueError(f"p_list {value} must lie in [1, inf]")
        return value

    @field_validator("decay_times")
    @classmethod
    def _times(cls, value: List[float]) -> List[float]:
        return _ascending_positive(value, "decay_times")


class EviSection(Section):
    delta: float = Field(description="Finite-difference step", default=0.01, gt=0.0)
    t_list: List[float] = Field(description="Times of the EVI check", default_factory=lambda: [0.25, 0.5, 1.0])
    mu0: str = Field(description="Initial measure: stationary, left_half or shifted", default="left_half")
    shift: float = Field(description="Shift a of the Gaussian used by the negative control", default=2.0)
    negative_control: bool = Field(description="Also run K + 1 on shifted data and expect failure", default=True)

    @field_validator("t_list", mode="before")
    @classmethod
    def _parse_numbers(cls, value):
        return _floats(value)

    @field_validator("t_list")
    @classmethod
    def _times(cls, value: List[float]) -> List[float]:
        return _ascending_positive(value, "t_list")

    @field_validator("mu0")
    @classmethod
    def _kind(cls, value: str) -> str:
        if value not in ("stationary", "left_half") and not value.startswith("shifted:"):
            raise ValueError(f"mu0 {value!r} must be stationary, left_half or shifted:<a>")
        return value

    @model_validator(mode="after")
    def _step(self) -> "EviSection":
        if self.delta > self.t_list[0] / 2.0:
            raise ValueError(f"delta = {self.delta} exceeds min(t_list)/2")
        return self


class CdSection(Section):
    t_list: List[float] = Field(description="Interpolation times in [0, 1]", default_factory=lambda: [0.25, 0.5, 0.75])
    centers: Tuple[float, float] = Field(description="Centres of the two Gaussian endpoints", default=(-1.0, 1.0))
    width: float = Field(description="Standard deviation of the Gaussian endpoints", default=1.0, gt=0.0)

    @field_validator("t_list", "centers", mode="before")
    @classmethod
    def _parse_numbers(cls, value):
        return _floats(value)

    @field_validator("t_list")
    @classmethod
    def _unit(cls, value: List[float]) -> List[float]:
        if any(not 0.0 <= t <= 1.0 for t in value):
            raise ValueError(f"t_list {value} must lie in [0, 1]")
        return value


class CalculusSection(Section):
    corpus_size: int = Field(description="Random polynomial tuples per identity", default=100, ge=1)
    n_samples: int = Field(description="Sample points of the pointwise estimates", default=1001, ge=2)
    interval: Tuple[float, float] = Field(description="Sampling interval", default=(-1.0, 1.0))

    @field_validator("interval", mode="before")
    @classmethod
    def _parse_numbers(cls, value):
        return _floats(value)

    @field_validator("interval")
    @classmethod
    def _ordered(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not value[0] < value[1]:
            raise ValueError(f"interval {value} must be increasing")
        return value


class ExperimentConfig(BaseModel):
    """Validated experiment configuration."""

    model_config = ConfigDict(extra="forbid")

    run: RunSection = Field(description="Run selection and output", default_factory=RunSection)
    space: SpaceSection = Field(description="State space and generator", default_factory=SpaceSection)
    curvature: CurvatureSection = Field(description="Curvature parameter", default_factory=CurvatureSection)
    times: TimesSection = Field(description="Semigroup times", default_factory=TimesSection)
    gradient: GradientSection = Field(description="Gradient estimate parameters", default_factory=GradientSection)
    contraction: ContractionSection = Field(description="Transport contraction parameters", default_factory=ContractionSection)
    evi: EviSection = Field(description="EVI parameters", default_factory=EviSection)
    cd: CdSection = Field(description="Displacement convexity parameters", default_factory=CdSection)
    calculus: CalculusSection = Field(description="Polynomial corpus parameters", default_factory=CalculusSection)
    source: Optional[str] = Field(description="Path the configuration was read from", default=None)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read and validate an INI experiment configuration.

    Args:
        path: Configuration file

    Returns:
        The validated configuration, rates_file resolved against the config directory

    Raises:
        ConfigParse: unreadable file, unknown section or key, or invalid value
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigParse(f"configuration file {path} does not exist")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigParse(f"{path}: {e}") from e

    known = set(ExperimentConfig.model_fields) - {"source"}
    raw = {}
    for section in parser.sections():
        if section not in known:
            raise ConfigParse(f"{path}: unknown section [{section}]")
        raw[section] = dict(parser.items(section))

    try:
        config = ExperimentConfig(**raw, source=str(path))
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise ConfigParse(f"{path}: invalid field '{field}': {first['msg']}") from e

    if config.space.kind == "chain":
        rates = Path(config.space.rates_file)
        if not rates.is_absolute():
            rates = path.parent / rates
        if not rates.is_file():
            raise ConfigParse(f"{path}: invalid field 'space.rates_file': {rates} does not exist")
        config = config.model_copy(update={"space": config.space.model_copy(update={"rates_file": str(rates)})})
    logger.debug(f"Loaded configuration {path} with suites {config.run.suites}")
    return config
