"""Univariate and multivariate polynomials for the exact model-space checks."""

import itertools
import re
from typing import Dict, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import MAX_MULTIVARIATE_DEGREE, MAX_UNIVARIATE_DEGREE
from src.calculus.errors import ConfigParse, DegreeOverflow

UnivariatePoly = Polynomial

_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM_RE = re.compile(rf"([+-])?({_NUMBER})?((?:\*?[a-z]\d*(?:\^\d+)?)*)")
_FACTOR_RE = re.compile(r"\*?([a-z])(\d*)(?:\^(\d+))?")


def guard(p: Polynomial) -> Polynomial:
    """Trim trailing zeros and enforce the univariate degree limit."""
    p = p.trim(tol=0)
    if p.degree() > MAX_UNIVARIATE_DEGREE:
        raise DegreeOverflow(f"degree {p.degree()} exceeds {MAX_UNIVARIATE_DEGREE}")
    return p


def univariate(coefficients: Sequence[float]) -> Polynomial:
    """Polynomial from ascending coefficients."""
    return guard(Polynomial(np.asarray(coefficients, dtype=float)))


def _tokenise(text: str):
    """Yield (coefficient, [(variable, index, power), ...]) for each term."""
    s = re.sub(r"\s+", "", text)
    if not s:
        raise ConfigParse("empty polynomial")
    pos = 0
    while pos < len(s):
        m = _TERM_RE.match(s, pos)
        sign, number, factors = m.groups()
        if m.end() == pos or (number is None and not factors) or (pos > 0 and sign is None):
            raise ConfigParse(f"cannot parse polynomial {text!r} at position {pos}")
        if number is None and factors.startswith("*"):
            raise ConfigParse(f"dangling '*' in {text!r}")
        coefficient = float(number) if number else 1.0
        if sign == "-":
            coefficient = -coefficient
        parsed = []
        consumed = 0
        for fm in _FACTOR_RE.finditer(factors):
            if fm.start() != consumed:
                raise ConfigParse(f"malformed factor in {text!r}")
            consumed = fm.end()
            parsed.append((fm.group(1), fm.group(2), int(fm.group(3) or 1)))
        if consumed != len(factors):
            raise ConfigParse(f"malformed factor in {text!r}")
        yield coefficient, parsed
        pos = m.end()


def parse_univariate(text: str) -> Polynomial:
    """Parse strings such as ``1 + 0.5*x^2`` (variable ``x``, ``^`` for powers)."""
    coefficients: Dict[int, float] = {}
    for coefficient, factors in _tokenise(text):
        power = 0
        for variable, index, exponent in factors:
            if variable != "x" or index:
                raise ConfigParse(f"unknown variable {variable}{index} in {text!r}")
            power += exponent
        coefficients[power] = coefficients.get(power, 0.0) + coefficient
    dense = np.zeros(max(coefficients) + 1)
    for power, c in coefficients.items():
        dense[power] = c
    return univariate(dense)


class MultivariatePoly(BaseModel):
    """Sparse polynomial in y1..yn, stored as exponent tuple -> coefficient."""

    model_config = ConfigDict(frozen=True)

    nvars: int = Field(description="Number of variables n")
    terms: Dict[Tuple[int, ...], float] = Field(description="Nonzero coefficients keyed by exponent tuple")

    @field_validator("terms", mode="before")
    @classmethod
    def _drop_zeros(cls, value):
        return {tuple(int(e) for e in k): float(c) for k, c in dict(value).items() if c != 0}

    @model_validator(mode="after")
    def _check(self) -> "MultivariatePoly":
        if self.nvars < 1:
            raise ConfigParse("a multivariate polynomial needs at least one variable")
        for exponents in self.terms:
            if len(exponents) != self.nvars or min(exponents) < 0:
                raise ConfigParse(f"exponent tuple {exponents} does not match {self.nvars} variables")
        if self.total_degree > MAX_MULTIVARIATE_DEGREE:
            raise DegreeOverflow(f"total degree {self.total_degree} exceeds {MAX_MULTIVARIATE_DEGREE}")
        return self

    @property
    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    @property
    def vanishes_at_origin(self) -> bool:
        return (0,) * self.nvars not in self.terms

    def partial(self, i: int) -> "MultivariatePoly":
        """Derivative with respect to y_{i+1} (zero-based i)."""
        out: Dict[Tuple[int, ...], float] = {}
        for exponents, c in self.terms.items():
            if exponents[i] == 0:
                continue
            lowered = list(exponents)
            lowered[i] -= 1
            key = tuple(lowered)
            out[key] = out.get(key, 0.0) + c * exponents[i]
        return MultivariatePoly(nvars=self.nvars, terms=out)

    def compose(self, fields: Sequence[Polynomial]) -> Polynomial:
        """Phi(f_1, ..., f_n) as a univariate polynomial."""
        if len(fields) != self.nvars:
            raise ConfigParse(f"expected {self.nvars} polynomials, got {len(fields)}")
        total = Polynomial([0.0])
        for exponents, c in self.terms.items():
            term = Polynomial([c])
            for f, e in zip(fields, exponents):
                if e:
                    term = term * f**e
            total = total + term
        return guard(total)


def parse_multivariate(text: str, nvars: int = 0) -> MultivariatePoly:
    """
    Parse strings such as ``2*y1^2*y3 - y2``.

    Args:
        text: Polynomial in variables y1, y2, ...
        nvars: Number of variables; inferred from the largest index when 0

    Returns:
        The parsed polynomial
    """
    parsed = []
    largest = 0
    for coefficient, factors in _tokenise(text):
        powers = {}
        for variable, index, exponent in factors:
            if variable != "y" or not index or int(index) < 1:
                raise ConfigParse(f"unknown variable {variable}{index} in {text!r}")
            k = int(index)
            largest = max(largest, k)
            powers[k] = powers.get(k, 0) + exponent
        parsed.append((coefficient, powers))
    nvars = nvars or max(largest, 1)
    if largest > nvars:
        raise ConfigParse(f"{text!r} uses y{largest} but only {nvars} variables are declared")
    terms: Dict[Tuple[int, ...], float] = {}
    for coefficient, powers in parsed:
        key = tuple(powers.get(k, 0) for k in range(1, nvars + 1))
        terms[key] = terms.get(key, 0.0) + coefficient
    return MultivariatePoly(nvars=nvars, terms=terms)


def random_polynomial(rng: np.random.Generator, max_degree: int = 4, bound: float = 2.0) -> Polynomial:
    """Polynomial of random degree <= max_degree with coefficients in [-bound, bound]."""
    degree = int(rng.integers(0, max_degree + 1))
    return univariate(rng.uniform(-bound, bound, size=degree + 1))


def random_potential(rng: np.random.Generator, K: float) -> Polynomial:
    """V = K x^2 / 2 + eps x^4 with eps in [0, 1/2], so V'' >= K everywhere."""
    eps = float(rng.uniform(0.0, 0.5))
    return univariate([0.0, 0.0, 0.5 * K, 0.0, eps])


def random_composition(rng: np.random.Generator, nvars: int, degree: int = 2, bound: float = 2.0) -> MultivariatePoly:
    """Random Phi with Phi(0) = 0, all monomials of total degree 1..degree."""
    terms = {}
    for exponents in itertools.product(range(degree + 1), repeat=nvars):
        if 1 <= sum(exponents) <= degree:
            terms[exponents] = float(rng.uniform(-bound, bound))
    return MultivariatePoly(nvars=nvars, terms=terms)
