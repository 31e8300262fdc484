"""
Discrete optimal transport, relative entropy and heat flow of measures.

One-dimensional distances use the monotone (quantile) coupling; general
costs go through the exact network simplex of POT, whose dual potentials
are checked before a plan is returned.
"""

import math
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import ot
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import MAX_LP_ATOMS, TOLERANCES, get_logger
from src.calculus.core_space import Measure, ReversibleGenerator
from src.calculus.errors import (
    ExcessClamp,
    GridRequired,
    Infeasible,
    NegativeTime,
    OptimalityCertificateError,
    SizeMismatch,
    SizeOverflow,
    StepTooLarge,
    SupportMismatch,
    UnsortedSupport,
)
from src.calculus.reports import CheckReport
from src.calculus.semigroup import SpectralFactorization, check_curvature
from src.calculus.gamma_calculus import Curvature

logger = get_logger(__name__)

INF = math.inf


class DiscreteMeasure(BaseModel):
    """Probability measure with finitely many atoms."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    support: np.ndarray = Field(description="Atom positions")
    weights: np.ndarray = Field(description="Nonnegative masses summing to 1")

    @field_validator("support", "weights", mode="before")
    @classmethod
    def _coerce(cls, value):
        arr = np.array(value, dtype=float).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check(self) -> "DiscreteMeasure":
        if self.support.shape != self.weights.shape or self.support.size == 0:
            raise SizeMismatch(f"{self.support.size} positions but {self.weights.size} weights")
        if not np.all(np.isfinite(self.support)) or not np.all(np.isfinite(self.weights)):
            raise SizeMismatch("positions and weights must be finite")
        if np.any(self.weights < 0):
            raise SizeMismatch(f"negative weight {float(np.min(self.weights))!r}")
        if abs(float(np.sum(self.weights)) - 1.0) > TOLERANCES["row_sum"]:
            raise SizeMismatch(f"weights sum to {float(np.sum(self.weights))!r}, expected 1")
        return self

    @classmethod
    def dirac(cls, position: float) -> "DiscreteMeasure":
        return cls(support=[position], weights=[1.0])

    @classmethod
    def from_masses(cls, support, masses) -> "DiscreteMeasure":
        """Normalise nonnegative masses to a probability measure."""
        masses = np.asarray(masses, dtype=float)
        return cls(support=support, weights=masses / np.sum(masses))

    @property
    def mean(self) -> float:
        return float(np.sum(self.support * self.weights))

    @property
    def variance(self) -> float:
        return float(np.sum((self.support - self.mean) ** 2 * self.weights))


class TransportPlan(BaseModel):
    """Sparse coupling between a rows-atom and a cols-atom measure."""

    model_config = ConfigDict(frozen=True)

    rows: int = Field(description="Number of atoms of the source measure")
    cols: int = Field(description="Number of atoms of the target measure")
    entries: List[Tuple[int, int, float]] = Field(description="(i, j, mass) with mass > 0")

    @model_validator(mode="after")
    def _check(self) -> "TransportPlan":
        for i, j, mass in self.entries:
            if not (0 <= i < self.rows and 0 <= j < self.cols) or mass <= 0:
                raise SizeMismatch(f"invalid plan entry ({i}, {j}, {mass})")
        return self

    def dense(self) -> np.ndarray:
        G = np.zeros((self.rows, self.cols))
        for i, j, mass in self.entries:
            G[i, j] += mass
        return G

    def marginals(self) -> Tuple[np.ndarray, np.ndarray]:
        G = self.dense()
        return G.sum(axis=1), G.sum(axis=0)


class CostFunction(BaseModel):
    """
    Nondecreasing transport cost r -> h(scale * r).

    ``power`` is r^p, ``sup`` selects the bottleneck (W_inf) problem and
    ``custom`` interpolates breakpoints linearly, held flat outside them.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["power", "sup", "custom"] = Field(description="Cost family")
    p: float = Field(description="Exponent of the power cost", default=1.0)
    breakpoints: List[Tuple[float, float]] = Field(description="(r, h(r)) pairs of the custom cost", default_factory=list)
    scale: float = Field(description="Argument rescaling factor", default=1.0)

    @model_validator(mode="after")
    def _check(self) -> "CostFunction":
        if self.kind == "power" and not 1.0 <= self.p < INF:
            raise SizeMismatch(f"power cost needs p in [1, inf), got {self.p}")
        if self.kind == "custom":
            if not self.breakpoints:
                raise SizeMismatch("custom cost needs breakpoints")
            r = np.array([b[0] for b in self.breakpoints])
            h = np.array([b[1] for b in self.breakpoints])
            if r[0] < 0 or np.any(np.diff(r) <= 0):
                raise SizeMismatch("breakpoints must be nonnegative and strictly increasing")
            if h[0] < 0 or np.any(np.diff(h) < 0):
                raise SizeMismatch("custom cost must satisfy h(0) >= 0 and be nondecreasing")
        if self.scale <= 0:
            raise SizeMismatch(f"scale must be positive, got {self.scale}")
        return self

    @classmethod
    def power(cls, p: float) -> "CostFunction":
        return cls(kind="power", p=p)

    @classmethod
    def sup(cls) -> "CostFunction":
        return cls(kind="sup")

    @classmethod
    def piecewise(cls, points: Sequence[Tuple[float, float]]) -> "CostFunction":
        return cls(kind="custom", breakpoints=[(float(r), float(h)) for r, h in points])

    def rescaled(self, factor: float) -> "CostFunction":
        """The cost r -> h(factor * r)."""
        return self.model_copy(update={"scale": self.scale * factor})

    def __call__(self, r):
        r = self.scale * np.asarray(r, dtype=float)
        if self.kind == "power":
            return r**self.p
        if self.kind == "sup":
            return r
        xs, hs = zip(*self.breakpoints)
        return np.interp(r, xs, hs)

    def lipschitz(self, r_max: float) -> float:
        """Largest slope of r -> h(scale * r) on [0, r_max]."""
        if self.kind == "sup":
            return self.scale
        if self.kind == "power":
            return self.scale * self.p * (self.scale * r_max) ** (self.p - 1.0)
        r = np.array([b[0] for b in self.breakpoints])
        h = np.array([b[1] for b in self.breakpoints])
        slopes = np.diff(h) / np.diff(r) if len(r) > 1 else np.array([0.0])
        return self.scale * float(np.max(slopes, initial=0.0))

    @property
    def label(self) -> str:
        if self.kind == "power":
            return f"r^{self.p:g}"
        if self.kind == "sup":
            return "sup"
        return "piecewise(" + ";".join(f"{r:g}:{h:g}" for r, h in self.breakpoints) + ")"


def _sorted_atoms(mu: DiscreteMeasure) -> Tuple[np.ndarray, np.ndarray]:
    if np.any(np.diff(mu.support) < 0):
        raise UnsortedSupport("support positions must be sorted increasingly")
    # tied positions are merged by adding weights
    positions, inverse = np.unique(mu.support, return_inverse=True)
    return positions, np.bincount(inverse, weights=mu.weights)


def _quantile_pieces(mu: DiscreteMeasure, nu: DiscreteMeasure):
    """Merged-CDF intervals: (interval masses, quantile of mu, quantile of nu)."""
    xu, wu = _sorted_atoms(mu)
    xv, wv = _sorted_atoms(nu)
    cu = np.cumsum(wu)
    cv = np.cumsum(wv)
    cu[-1] = cv[-1] = 1.0
    qs = np.sort(np.concatenate([cu, cv]))
    masses = np.diff(np.concatenate([[0.0], qs]))
    qu = xu[np.clip(np.searchsorted(cu, qs, side="left"), 0, len(xu) - 1)]
    qv = xv[np.clip(np.searchsorted(cv, qs, side="left"), 0, len(xv) - 1)]
    return masses, qu, qv


def wasserstein_1d(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    p: float = 1.0,
    mass_floor: Optional[float] = None,
) -> float:
    """
    W_p on the line through the monotone coupling.

    Args:
        mu: Source measure with sorted support
        nu: Target measure with sorted support
        p: Exponent in [1, inf]; inf gives the largest quantile gap
        mass_floor: Intervals lighter than this are ignored for p = inf

    Returns:
        The distance
    """
    if not p >= 1.0:
        raise SizeMismatch(f"p must be in [1, inf], got {p}")
    masses, qu, qv = _quantile_pieces(mu, nu)
    gaps = np.abs(qu - qv)
    if p == INF:
        floor = TOLERANCES["winf_mass_floor"] if mass_floor is None else mass_floor
        charged = masses > floor
        return float(np.max(gaps[charged], initial=0.0))
    return float(np.sum(masses * gaps**p) ** (1.0 / p))


def _certify(C: np.ndarray, G: np.ndarray, u: np.ndarray, v: np.ndarray) -> None:
    tolerance = TOLERANCES["lp_certificate"] * max(1.0, float(np.max(np.abs(C))))
    reduced = C - u[:, None] - v[None, :]
    if np.min(reduced) < -tolerance:
        i, j = np.unravel_index(int(np.argmin(reduced)), reduced.shape)
        raise OptimalityCertificateError(f"dual infeasible at ({i}, {j}): u + v - c = {-reduced[i, j]:.3e}")
    basic = G > 0
    if np.any(basic) and np.max(np.abs(reduced[basic])) > tolerance:
        raise OptimalityCertificateError("complementary slackness fails on the plan support")


def _solve_emd(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> Tuple[float, TransportPlan]:
    rows, cols = C.shape
    keep_a = np.flatnonzero(a > 0)
    keep_b = np.flatnonzero(b > 0)
    Ck = np.ascontiguousarray(C[np.ix_(keep_a, keep_b)])
    Gk, log = ot.emd(
        np.ascontiguousarray(a[keep_a]),
        np.ascontiguousarray(b[keep_b]),
        Ck,
        numItermax=1_000_000,
        log=True,
    )
    if log.get("result_code", 1) != 1:
        raise Infeasible(f"network simplex stopped: {log.get('warning')}")

    u = np.empty(rows)
    v = np.empty(cols)
    u[keep_a] = log["u"]
    v[keep_b] = log["v"]
    # potentials of zero-mass atoms are the tightest feasible values
    dropped_a = np.setdiff1d(np.arange(rows), keep_a)
    if dropped_a.size:
        u[dropped_a] = np.min(C[np.ix_(dropped_a, keep_b)] - v[keep_b][None, :], axis=1)
    dropped_b = np.setdiff1d(np.arange(cols), keep_b)
    if dropped_b.size:
        v[dropped_b] = np.min(C[:, dropped_b] - u[:, None], axis=0)

    G = np.zeros((rows, cols))
    G[np.ix_(keep_a, keep_b)] = Gk
    _certify(C, G, u, v)

    if np.max(np.abs(G.sum(axis=1) - a)) > TOLERANCES["marginal"] or np.max(np.abs(G.sum(axis=0) - b)) > TOLERANCES["marginal"]:
        raise Infeasible("plan marginals do not reproduce the input measures")
    ii, jj = np.nonzero(G > 0)
    if len(ii) > len(keep_a) + len(keep_b) - 1:
        raise OptimalityCertificateError(f"{len(ii)} basic entries exceed rows + cols - 1")
    plan = TransportPlan(
        rows=rows,
        cols=cols,
        entries=[(int(i), int(j), float(G[i, j])) for i, j in zip(ii, jj)],
    )
    return float(np.sum(G * C)), plan


def transport_cost_lp(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    cost: CostFunction,
    distance_matrix: Optional[np.ndarray] = None,
) -> Tuple[float, TransportPlan]:
    """
    Optimal transport cost min over couplings of sum h(d(x, y)) for finite measures.

    The ``sup`` cost solves the bottleneck problem: bisection over the
    sorted distinct distances, each step an LP with 0/1 costs.

    Args:
        mu: Source measure
        nu: Target measure
        cost: Cost function h
        distance_matrix: d(x_i, y_j); |x_i - y_j| from the supports when omitted

    Returns:
        Optimal value and an optimal plan
    """
    a, b = mu.weights, nu.weights
    if len(a) > MAX_LP_ATOMS or len(b) > MAX_LP_ATOMS:
        raise SizeOverflow(f"{len(a)} x {len(b)} atoms exceed the limit of {MAX_LP_ATOMS}")
    D = np.abs(mu.support[:, None] - nu.support[None, :]) if distance_matrix is None else np.asarray(distance_matrix, dtype=float)
    if D.shape != (len(a), len(b)):
        raise SizeMismatch(f"distance matrix has shape {D.shape}, expected {(len(a), len(b))}")

    if cost.kind != "sup":
        return _solve_emd(a, b, np.asarray(cost(D), dtype=float))

    live = D[np.ix_(a > 0, b > 0)]
    candidates = np.unique(live)
    lo, hi = 0, len(candidates) - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        value, plan = _solve_emd(a, b, (D > candidates[mid]).astype(float))
        if value <= TOLERANCES["lp_certificate"]:
            best = (mid, plan)
            hi = mid - 1
        else:
            lo = mid + 1
    if best is None:
        raise Infeasible("no threshold admits a feasible plan")
    return float(cost(candidates[best[0]])), best[1]


def _clamp(weights: np.ndarray) -> Tuple[np.ndarray, float]:
    """Zero out round-off noise and negatives, renormalise, return the removed mass."""
    clamped = (weights < 0) | (np.abs(weights) < TOLERANCES["heat_noise_floor"])
    removed = float(np.sum(np.abs(weights[clamped])))
    if removed > TOLERANCES["clamp_limit"]:
        raise ExcessClamp(f"clamping removed mass {removed:.3e}")
    cleaned = np.where(clamped, 0.0, weights)
    return cleaned / np.sum(cleaned), removed


def _positions(F: SpectralFactorization, L: Optional[ReversibleGenerator]) -> np.ndarray:
    if L is not None and L.space.positions is not None:
        return np.array(L.space.positions)
    return np.arange(F.n, dtype=float)


def heat_kernel_row(F: SpectralFactorization, x_index: int, t: float) -> Tuple[np.ndarray, float]:
    """Clamped row x of P_t against m and the clamped mass."""
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")
    if not 0 <= x_index < F.n:
        raise SizeMismatch(f"state {x_index} outside 0..{F.n - 1}")
    if t == 0:
        row = np.zeros(F.n)
        row[x_index] = 1.0
        return row, 0.0
    Q = F.eigenvectors
    row = (Q[x_index] * np.exp(t * F.eigenvalues)) @ Q.T * F.m
    return _clamp(row)


def heat_flow_dirac(
    F: SpectralFactorization,
    x_index: int,
    t: float,
    L: Optional[ReversibleGenerator] = None,
) -> DiscreteMeasure:
    """
    Fundamental solution H_t delta_x as a measure on the states.

    Atoms sit at grid positions when L is a grid generator and at state
    indices otherwise.
    """
    weights, removed = heat_kernel_row(F, x_index, t)
    if removed:
        logger.debug(f"Clamped mass {removed:.3e} from heat kernel row {x_index} at t={t}")
    return DiscreteMeasure(support=_positions(F, L), weights=weights)


def heat_flow_measure(
    F: SpectralFactorization,
    mu: DiscreteMeasure,
    t: float,
    L: Optional[ReversibleGenerator] = None,
) -> DiscreteMeasure:
    """H_t mu for mu = rho m supported on the states: the density evolves by P_t."""
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")
    if mu.weights.shape != (F.n,):
        raise SupportMismatch(f"measure has {mu.weights.size} atoms, expected {F.n}")
    if t == 0:
        return mu
    rho = mu.weights / F.m
    evolved = F.synthesise(np.exp(t * F.eigenvalues), rho) * F.m
    weights, _ = _clamp(evolved)
    return DiscreteMeasure(support=_positions(F, L), weights=weights)


def entropy(mu: DiscreteMeasure, m: Measure) -> float:
    """Relative entropy sum rho log rho m with rho = mu / m and 0 log 0 = 0."""
    if mu.weights.shape != m.weights.shape:
        raise SupportMismatch(f"measure has {mu.weights.size} atoms but m has {m.weights.size} states")
    w = mu.weights
    charged = w > 0
    return float(np.sum(w[charged] * np.log(w[charged] / m.weights[charged])))


def _require_grid(L: ReversibleGenerator) -> np.ndarray:
    if L.space.positions is None:
        raise GridRequired("this experiment needs a 1D grid generator")
    return np.array(L.space.positions)


def nearest_state(L: ReversibleGenerator, position: float) -> int:
    """Grid node closest to a position."""
    return int(np.argmin(np.abs(_require_grid(L) - position)))


def _grid_tolerance(p: float, h: float) -> float:
    return 5.0 * h if p == INF else 2.0 * h


def contraction_experiment(
    F: SpectralFactorization,
    L: ReversibleGenerator,
    K: float,
    x: float,
    y: float,
    t_list: Sequence[float],
    p_list: Sequence[float],
    costs: Sequence[CostFunction] = (),
    curvature: Optional[Curvature] = None,
) -> List[CheckReport]:
    """
    Contraction of fundamental solutions started at x and y.

    Per (t, p): W_p(H_t delta_x, H_t delta_y) <= exp(-Kt) |x - y| + tol_grid.
    Per (t, h): the LP cost of h(exp(Kt) r) between the two solutions is at
    most h(|x - y|). A final row records the largest clamped mass.
    """
    positions = _require_grid(L)
    check_curvature(L, K, curvature)
    h = L.space.spacing
    xi, yi = nearest_state(L, x), nearest_state(L, y)
    d = abs(positions[xi] - positions[yi])
    reports: List[CheckReport] = []
    worst_clamp = 0.0
    for t in sorted(t_list):
        wx, cx = heat_kernel_row(F, xi, t)
        wy, cy = heat_kernel_row(F, yi, t)
        worst_clamp = max(worst_clamp, cx, cy)
        rho_x = DiscreteMeasure(support=positions, weights=wx)
        rho_y = DiscreteMeasure(support=positions, weights=wy)
        for p in sorted(p_list):
            reports.append(
                CheckReport.from_sides(
                    f"wasserstein_contraction[p={p:g}]",
                    wasserstein_1d(rho_x, rho_y, p),
                    math.exp(-K * t) * d,
                    _grid_tolerance(p, h),
                    worst_state=t,
                )
            )
        for cost in costs:
            growth = math.exp(K * t)
            value, _ = transport_cost_lp(rho_x, rho_y, cost.rescaled(growth))
            tolerance = 2.0 * h * cost.rescaled(growth).lipschitz(positions[-1] - positions[0])
            reports.append(
                CheckReport.from_sides(
                    f"cost_contraction[{cost.label}]",
                    value,
                    float(cost(d)),
                    tolerance,
                    worst_state=t,
                )
            )
    reports.append(
        CheckReport.from_sides("heat_kernel_clamp", worst_clamp, TOLERANCES["clamp_limit"], 0.0, worst_state="max")
    )
    return reports


def density_contraction_check(
    F: SpectralFactorization,
    L: ReversibleGenerator,
    K: float,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    t_list: Sequence[float],
    p_list: Sequence[float],
    curvature: Optional[Curvature] = None,
) -> List[CheckReport]:
    """W_p(H_t mu, H_t nu) <= exp(-Kt) W_p(mu, nu) + tol_grid for measures on the grid."""
    _require_grid(L)
    check_curvature(L, K, curvature)
    h = L.space.spacing
    reports = []
    for p in sorted(p_list):
        initial = wasserstein_1d(mu, nu, p)
        for t in sorted(t_list):
            reports.append(
                CheckReport.from_sides(
                    f"density_contraction[p={p:g}]",
                    wasserstein_1d(heat_flow_measure(F, mu, t, L), heat_flow_measure(F, nu, t, L), p),
                    math.exp(-K * t) * initial,
                    _grid_tolerance(p, h),
                    worst_state=t,
                )
            )
    return reports


def decay_rate_check(
    F: SpectralFactorization,
    L: ReversibleGenerator,
    K: float,
    x: float,
    y: float,
    times: Sequence[float],
    relative_tolerance: float = 0.02,
) -> CheckReport:
    """Least-squares slope of log W_2(H_t delta_x, H_t delta_y) over times equals -K."""
    positions = _require_grid(L)
    if len(times) < 2:
        raise SizeMismatch("a decay rate needs at least two times")
    xi, yi = nearest_state(L, x), nearest_state(L, y)
    logs = []
    for t in times:
        rho_x = DiscreteMeasure(support=positions, weights=heat_kernel_row(F, xi, t)[0])
        rho_y = DiscreteMeasure(support=positions, weights=heat_kernel_row(F, yi, t)[0])
        logs.append(math.log(wasserstein_1d(rho_x, rho_y, 2.0)))
    slope = float(np.polyfit(np.asarray(times, dtype=float), np.asarray(logs), 1)[0])
    logger.info(f"Fitted W2 decay rate {slope:.6g} against -K = {-K:.6g}")
    return CheckReport.from_sides(
        "w2_decay_rate",
        abs(slope + K),
        relative_tolerance * max(abs(K), 1e-12),
        0.0,
        worst_state=f"slope={slope:.6g}",
    )


def initial_measure(L: ReversibleGenerator, kind: str) -> DiscreteMeasure:
    """
    Initial data for heat flow experiments on a grid.

    ``stationary`` is the normalised m, ``left_half`` the normalised
    indicator of x < 0 against m, ``shifted:<a>`` the density exp(a x - a^2/2).
    """
    positions = _require_grid(L)
    m = np.array(L.m)
    if kind == "stationary":
        masses = m
    elif kind == "left_half":
        masses = np.where(positions < 0, m, 0.0)
    elif kind.startswith("shifted:"):
        a = float(kind.split(":", 1)[1])
        exponent = a * positions - 0.5 * a * a
        masses = m * np.exp(exponent - np.max(exponent))
    else:
        raise SizeMismatch(f"unknown initial measure {kind!r}")
    if not np.sum(masses) > 0:
        raise SizeMismatch(f"initial measure {kind!r} has no mass on the grid")
    return DiscreteMeasure.from_masses(positions, masses)


def evi_check(
    F: SpectralFactorization,
    L: ReversibleGenerator,
    K: float,
    mu0: DiscreteMeasure,
    nu: DiscreteMeasure,
    t_list: Sequence[float],
    delta: float,
) -> List[CheckReport]:
    """
    Evolution variational inequality along the heat flow of mu0.

    At each t the centred difference of W_2^2(mu_t, nu) / 2 plus
    K/2 W_2^2(mu_t, nu) is compared with Ent(nu) - Ent(mu_t), with
    allowance 10 delta + 5 h.
    """
    _require_grid(L)
    if any(t < 0 for t in t_list):
        raise NegativeTime(f"negative time in {list(t_list)}")
    if delta <= 0 or delta > min(t_list) / 2.0:
        raise StepTooLarge(f"delta = {delta} must lie in (0, min(t)/2 = {min(t_list) / 2.0}]")
    tolerance = 10.0 * delta + 5.0 * L.space.spacing
    target = entropy(nu, L.measure)

    def half_w2(t: float) -> float:
        return 0.5 * wasserstein_1d(heat_flow_measure(F, mu0, t, L), nu, 2.0) ** 2

    reports = []
    for t in sorted(t_list):
        mu_t = heat_flow_measure(F, mu0, t, L)
        w2sq = wasserstein_1d(mu_t, nu, 2.0) ** 2
        derivative = (half_w2(t + delta) - half_w2(t - delta)) / (2.0 * delta)
        reports.append(
            CheckReport.from_sides(
                "evi",
                derivative + 0.5 * K * w2sq,
                target - entropy(mu_t, L.measure),
                tolerance,
                worst_state=t,
            )
        )
    return reports


def displacement_interpolate(mu0: DiscreteMeasure, mu1: DiscreteMeasure, t: float) -> DiscreteMeasure:
    """Quantile interpolation F_t^{-1} = (1 - t) F_0^{-1} + t F_1^{-1}."""
    if not 0.0 <= t <= 1.0:
        raise SizeMismatch(f"interpolation time {t} outside [0, 1]")
    masses, q0, q1 = _quantile_pieces(mu0, mu1)
    charged = masses > 0
    positions = (1.0 - t) * q0[charged] + t * q1[charged]
    merged, inverse = np.unique(positions, return_inverse=True)
    weights = np.bincount(inverse, weights=masses[charged])
    return DiscreteMeasure(support=merged, weights=weights / np.sum(weights))


def rebin_to_grid(mu: DiscreteMeasure, positions: np.ndarray) -> DiscreteMeasure:
    """Move each atom to its nearest grid node, preserving mass."""
    positions = np.asarray(positions, dtype=float)
    right = np.clip(np.searchsorted(positions, mu.support), 1, len(positions) - 1)
    left = right - 1
    nearest = np.where(mu.support - positions[left] <= positions[right] - mu.support, left, right)
    weights = np.zeros(len(positions))
    np.add.at(weights, nearest, mu.weights)
    return DiscreteMeasure(support=positions, weights=weights)


def displacement_convexity_check(
    L: ReversibleGenerator,
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    K: float,
    t_list: Sequence[float],
) -> List[CheckReport]:
    """
    K-convexity of the entropy along displacement interpolation.

    Ent(mu_t) <= (1-t) Ent(mu0) + t Ent(mu1) - K/2 t(1-t) W_2^2(mu0, mu1)
    within 5h, plus the geodesic property W_2(mu0, mu_t) = t W_2(mu0, mu1)
    within 2h.
    """
    positions = _require_grid(L)
    h = L.space.spacing
    mu0 = rebin_to_grid(mu0, positions)
    mu1 = rebin_to_grid(mu1, positions)
    e0, e1 = entropy(mu0, L.measure), entropy(mu1, L.measure)
    w = wasserstein_1d(mu0, mu1, 2.0)
    reports = []
    for t in sorted(t_list):
        mu_t = rebin_to_grid(displacement_interpolate(mu0, mu1, t), positions)
        reports.append(
            CheckReport.from_sides(
                "displacement_convexity",
                entropy(mu_t, L.measure),
                (1.0 - t) * e0 + t * e1 - 0.5 * K * t * (1.0 - t) * w**2,
                5.0 * h,
                worst_state=t,
            )
        )
        reports.append(
            CheckReport.from_sides(
                "geodesic_distance",
                abs(wasserstein_1d(mu0, mu_t, 2.0) - t * w),
                0.0,
                2.0 * h,
                worst_state=t,
            )
        )
    return reports


def write_measure(mu: DiscreteMeasure, path: Union[str, Path]) -> Path:
    """CSV with columns position, weight."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"position": mu.support, "weight": mu.weights}).to_csv(path, index=False, float_format="%.17g")
    return path


def read_measure(path: Union[str, Path]) -> DiscreteMeasure:
    frame = pd.read_csv(path)
    if list(frame.columns) != ["position", "weight"]:
        raise SizeMismatch(f"{path}: expected columns position,weight")
    return DiscreteMeasure(support=frame["position"].to_numpy(), weights=frame["weight"].to_numpy())


def write_plan(plan: TransportPlan, path: Union[str, Path]) -> Path:
    """CSV with columns i, j, mass."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(plan.entries, columns=["i", "j", "mass"])
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def read_plan(path: Union[str, Path], rows: int, cols: int) -> TransportPlan:
    frame = pd.read_csv(path)
    if list(frame.columns) != ["i", "j", "mass"]:
        raise SizeMismatch(f"{path}: expected columns i,j,mass")
    entries = [(int(i), int(j), float(mass)) for i, j, mass in frame.itertuples(index=False)]
    return TransportPlan(rows=rows, cols=cols, entries=entries)
