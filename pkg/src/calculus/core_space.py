"""State spaces, measures and reversible Markov generators.

A generator is stored as a dense rate matrix ``L`` together with its
reversible measure ``m``; fields are plain 1-D ``numpy`` arrays indexed by
state.
"""

from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import MAX_DENSE_STATES, TOLERANCES, get_logger
from src.calculus.errors import (
    DegenerateGrid,
    DetailedBalanceViolation,
    NegativeRate,
    NonpositiveMass,
    PotentialOverflow,
    RowSumViolation,
    SizeMismatch,
)

logger = get_logger(__name__)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


class StateSpace(BaseModel):
    """Finite state space, optionally carrying 1D grid coordinates."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int = Field(description="Number of states (at least 2)")
    positions: Optional[np.ndarray] = Field(
        description="Strictly increasing coordinates for grid spaces, None for abstract chains",
        default=None,
    )

    @field_validator("positions", mode="before")
    @classmethod
    def _coerce_positions(cls, value):
        return None if value is None else _frozen(value)

    @model_validator(mode="after")
    def _check(self) -> "StateSpace":
        if self.n < 2:
            raise SizeMismatch(f"state space needs n >= 2, got {self.n}")
        if self.n > MAX_DENSE_STATES:
            raise SizeMismatch(f"dense representation limited to {MAX_DENSE_STATES} states, got {self.n}")
        if self.positions is not None:
            if self.positions.shape != (self.n,):
                raise SizeMismatch(f"expected {self.n} positions, got shape {self.positions.shape}")
            if not np.all(np.isfinite(self.positions)):
                raise DegenerateGrid("positions must be finite")
            if np.any(np.diff(self.positions) <= 0):
                raise DegenerateGrid("positions must be strictly increasing")
        return self

    @property
    def is_grid(self) -> bool:
        return self.positions is not None

    @property
    def spacing(self) -> float:
        """Largest gap between consecutive positions (the grid step h)."""
        if self.positions is None:
            raise DegenerateGrid("abstract chains have no spacing")
        return float(np.max(np.diff(self.positions)))


class Measure(BaseModel):
    """Strictly positive mass per state."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    weights: np.ndarray = Field(description="Mass of each state, all strictly positive")

    @field_validator("weights", mode="before")
    @classmethod
    def _coerce_weights(cls, value):
        return _frozen(value)

    @model_validator(mode="after")
    def _check(self) -> "Measure":
        w = self.weights
        if w.ndim != 1:
            raise SizeMismatch("measure weights must be one-dimensional")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            bad = int(np.argmin(np.where(np.isfinite(w), w, -np.inf)))
            raise NonpositiveMass(f"weight at state {bad} is {w[bad]!r}; full support is required")
        return self

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))


class ReversibleGenerator(BaseModel):
    """Markov generator L with reversible measure m (detailed balance m_i L_ij = m_j L_ji)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    space: StateSpace = Field(description="Underlying state space")
    measure: Measure = Field(description="Reversible measure m")
    rates: np.ndarray = Field(description="n x n rate matrix, off-diagonals >= 0, rows summing to 0")

    @field_validator("rates", mode="before")
    @classmethod
    def _coerce_rates(cls, value):
        return _frozen(value)

    @model_validator(mode="after")
    def _check(self) -> "ReversibleGenerator":
        n = self.space.n
        L = self.rates
        m = self.measure.weights
        if L.shape != (n, n):
            raise SizeMismatch(f"rate matrix has shape {L.shape}, expected ({n}, {n})")
        if m.shape != (n,):
            raise SizeMismatch(f"measure has {m.shape[0]} weights, expected {n}")
        off = L - np.diag(np.diag(L))
        if np.any(off < 0):
            i, j = np.unravel_index(int(np.argmin(off)), off.shape)
            raise NegativeRate(f"negative off-diagonal rate L[{i},{j}] = {L[i, j]}")
        row_sums = np.abs(L.sum(axis=1))
        if np.max(row_sums) > TOLERANCES["row_sum"] * max(1.0, float(np.max(np.abs(L)))):
            i = int(np.argmax(row_sums))
            raise RowSumViolation(f"row {i} sums to {L[i].sum()!r}")
        flux = m[:, None] * L
        asym = np.abs(flux - flux.T)
        allowed = TOLERANCES["detailed_balance"] * np.maximum(1.0, np.abs(flux))
        if np.any(asym > allowed):
            i, j = np.unravel_index(int(np.argmax(asym - allowed)), asym.shape)
            raise DetailedBalanceViolation(
                f"m_{i} L_{i}{j} = {flux[i, j]!r} but m_{j} L_{j}{i} = {flux[j, i]!r}"
            )
        return self

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def m(self) -> np.ndarray:
        return self.measure.weights

    def neighbours(self, x: int) -> np.ndarray:
        """States reachable from x in one jump."""
        row = self.rates[x].copy()
        row[x] = 0.0
        return np.flatnonzero(row > 0)


def build_chain(space: StateSpace, measure: Measure, rates) -> ReversibleGenerator:
    """
    Validate and assemble a reversible generator.

    Args:
        space: The state space
        measure: Reversible measure with full support
        rates: n x n rate matrix

    Returns:
        The validated generator

    Raises:
        RowSumViolation, DetailedBalanceViolation, NonpositiveMass, SizeMismatch
    """
    generator = ReversibleGenerator(space=space, measure=measure, rates=rates)
    logger.debug(f"Built chain with {space.n} states, total mass {measure.total:.6g}")
    return generator


def build_weighted_grid(a: float, b: float, n: int, V: Callable) -> ReversibleGenerator:
    """
    Discretise the weighted diffusion Lf = f'' - V'f' on [a, b] with reflecting ends.

    Node weights are h*exp(-V(x_i)) and edge conductances exp(-V(midpoint))/h^2,
    so detailed balance holds by construction.

    Args:
        a: Left endpoint
        b: Right endpoint
        n: Number of nodes (at least 3)
        V: Potential, any callable on arrays (typically a numpy Polynomial)

    Returns:
        The grid generator
    """
    if n < 3 or not a < b:
        raise DegenerateGrid(f"need n >= 3 and a < b, got n={n}, a={a}, b={b}")
    x = np.linspace(a, b, n)
    h = (b - a) / (n - 1)
    mid = 0.5 * (x[:-1] + x[1:])
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        v_nodes = np.broadcast_to(np.asarray(V(x), dtype=float), x.shape)
        v_mid = np.broadcast_to(np.asarray(V(mid), dtype=float), mid.shape)
        weights = h * np.exp(-v_nodes)
        conductance = np.exp(-v_mid) / h**2
    for label, values, potential in (("node", weights, v_nodes), ("midpoint", conductance, v_mid)):
        bad = ~np.isfinite(values) | (values <= 0)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise PotentialOverflow(f"exp(-V) not representable at {label} {k} (V = {potential[k]!r})")

    rates = np.zeros((n, n))
    idx = np.arange(n - 1)
    # jump rates expressed through potential differences keep the ratio accurate
    rates[idx, idx + 1] = np.exp(-(v_mid - v_nodes[:-1])) / h**2
    rates[idx + 1, idx] = np.exp(-(v_mid - v_nodes[1:])) / h**2
    rates[np.arange(n), np.arange(n)] = -rates.sum(axis=1)

    space = StateSpace(n=n, positions=x)
    logger.info(f"Built weighted grid on [{a}, {b}] with n={n}, h={h:.4g}")
    return build_chain(space, Measure(weights=weights), rates)


def as_field(L: ReversibleGenerator, f) -> np.ndarray:
    """Coerce values to a field on L's space, raising SizeMismatch otherwise."""
    arr = np.asarray(f, dtype=float)
    if arr.shape != (L.n,):
        raise SizeMismatch(f"field of shape {arr.shape} on a space of {L.n} states")
    return arr


def apply(L: ReversibleGenerator, f) -> np.ndarray:
    """(Lf)_i = sum_j L_ij f_j."""
    return L.rates @ as_field(L, f)


def inner(L: ReversibleGenerator, f, g) -> float:
    """m-weighted inner product <f, g>_m."""
    return float(np.sum(as_field(L, f) * as_field(L, g) * L.m))


def integrate(L: ReversibleGenerator, f) -> float:
    """Integral of f against m."""
    return float(np.sum(as_field(L, f) * L.m))


def dirichlet_energy(L: ReversibleGenerator, f, g=None) -> float:
    """E(f, g) = -<f, Lg>_m; E(f) when g is omitted."""
    g = f if g is None else g
    return -inner(L, f, apply(L, g))


def random_chain(n: int, rng: np.random.Generator, density: float = 0.6) -> ReversibleGenerator:
    """
    Draw a connected reversible chain from symmetric conductances.

    L_ij = c_ij / m_i with c symmetric, so detailed balance holds exactly.
    """
    m = rng.uniform(0.5, 2.0, size=n)
    c = np.where(rng.uniform(size=(n, n)) < density, rng.uniform(0.1, 2.0, size=(n, n)), 0.0)
    c = np.triu(c, 1)
    # path backbone keeps the chain irreducible
    c[np.arange(n - 1), np.arange(1, n)] = np.maximum(c[np.arange(n - 1), np.arange(1, n)], 0.1)
    c = c + c.T
    rates = c / m[:, None]
    rates[np.arange(n), np.arange(n)] = -rates.sum(axis=1)
    return build_chain(StateSpace(n=n), Measure(weights=m), rates)


def write_generator(L: ReversibleGenerator, path: Union[str, Path]) -> Path:
    """
    Serialise L to the plain-text generator format.

    Header ``n m_total``, one ``i x_i m_i`` line per state (``nan`` for
    abstract chains), then one ``i j L_ij`` line per nonzero rate.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    positions = L.space.positions
    lines = [f"{L.n} {L.measure.total:.17g}"]
    for i in range(L.n):
        x = float("nan") if positions is None else positions[i]
        lines.append(f"{i} {x:.17g} {L.m[i]:.17g}")
    for i, j in zip(*np.nonzero(L.rates)):
        lines.append(f"{i} {j} {L.rates[i, j]:.17g}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_generator(path: Union[str, Path]) -> ReversibleGenerator:
    """
    Parse a generator written by ``write_generator`` (validation included).

    Raises:
        SizeMismatch: a malformed line, an index outside 0..n-1, a missing
            state line, or a header m_total that differs from the sum of m_i
    """
    lines = [(k, line.split()) for k, line in enumerate(Path(path).read_text().splitlines(), start=1) if line.strip()]
    if not lines or len(lines[0][1]) != 2:
        raise SizeMismatch(f"{path}: missing 'n m_total' header")
    lineno, header = lines[0]
    try:
        n, m_total = int(header[0]), float(header[1])
    except ValueError as e:
        raise SizeMismatch(f"{path}:{lineno}: bad header {' '.join(header)!r}") from e
    if n < 1 or len(lines) < n + 1:
        raise SizeMismatch(f"{path}: expected {n} state lines")

    def parse(lineno: int, row: List[str]) -> Tuple[int, str, float]:
        if len(row) != 3:
            raise SizeMismatch(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        try:
            first, second, value = int(row[0]), row[1], float(row[2])
        except ValueError as e:
            raise SizeMismatch(f"{path}:{lineno}: cannot parse {' '.join(row)!r}") from e
        if not 0 <= first < n:
            raise SizeMismatch(f"{path}:{lineno}: state {first} outside 0..{n - 1}")
        return first, second, value

    xs = np.full(n, np.nan)
    ms = np.full(n, np.nan)
    for lineno, row in lines[1 : n + 1]:
        i, x, m = parse(lineno, row)
        try:
            xs[i] = float(x)
        except ValueError as e:
            raise SizeMismatch(f"{path}:{lineno}: cannot parse position {x!r}") from e
        ms[i] = m
    missing = np.flatnonzero(np.isnan(ms))
    if len(missing):
        raise SizeMismatch(f"{path}: no state line for state {int(missing[0])}")
    if abs(float(np.sum(ms)) - m_total) > 1e-10 * max(1.0, abs(m_total)):
        raise SizeMismatch(f"{path}: header m_total {m_total:.17g} but the weights sum to {float(np.sum(ms)):.17g}")

    rates = np.zeros((n, n))
    for lineno, row in lines[n + 1 :]:
        i, j, rate = parse(lineno, row)
        try:
            j = int(j)
        except ValueError as e:
            raise SizeMismatch(f"{path}:{lineno}: cannot parse state {j!r}") from e
        if not 0 <= j < n:
            raise SizeMismatch(f"{path}:{lineno}: state {j} outside 0..{n - 1}")
        rates[i, j] = rate
    positions = None if np.all(np.isnan(xs)) else xs
    return build_chain(StateSpace(n=n, positions=positions), Measure(weights=ms), rates)
