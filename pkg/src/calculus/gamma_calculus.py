"""Carre du champ calculus and Bakry-Emery curvature on finite reversible chains.

Every bilinear operator accepts fields of shape ``(n,)`` or batches of
fields stacked as columns, shape ``(n, k)``.
"""

import math
from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import minimize

from src.config import TOLERANCES, get_logger
from src.calculus.core_space import ReversibleGenerator, dirichlet_energy, integrate
from src.calculus.errors import GridRequired, IndefiniteGamma, PremiseViolation, SizeMismatch
from src.calculus.reports import CheckReport

logger = get_logger(__name__)


class CurvatureBound(str, Enum):
    """Sentinels for degenerate curvature problems."""

    PLUS_INFINITY = "+inf"  # B(x) = 0 and A(x) >= 0
    MINUS_INFINITY = "-inf"  # A(x) not PSD on ker B(x)


Curvature = Union[float, CurvatureBound]


class QuadraticFormPair(BaseModel):
    """Pointwise forms f -> Gamma_2(f)(x) (A) and f -> Gamma(f)(x) (B).

    Coordinates are the states within two jumps of ``state`` (listed in
    ``indices``) with f fixed to 0 at ``state`` itself, which removes the
    constant direction shared by both kernels.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: np.ndarray = Field(description="Symmetric matrix of the Gamma_2 form at the state")
    B: np.ndarray = Field(description="Symmetric PSD matrix of the Gamma form at the state")
    state: int = Field(description="State index x")
    indices: np.ndarray = Field(description="Global state index of each local coordinate")

    @model_validator(mode="after")
    def _check(self) -> "QuadraticFormPair":
        for label, M in (("A", self.A), ("B", self.B)):
            if M.shape != (len(self.indices), len(self.indices)):
                raise SizeMismatch(f"{label} has shape {M.shape}")
            scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
            if np.max(np.abs(M - M.T), initial=0.0) > TOLERANCES["symmetry"] * scale:
                raise SizeMismatch(f"{label}({self.state}) is not symmetric")
        return self


def _check_shape(L: ReversibleGenerator, *fields: np.ndarray) -> None:
    for f in fields:
        if f.shape[0] != L.n or f.ndim > 2:
            raise SizeMismatch(f"field of shape {f.shape} on a space of {L.n} states")


def _as_array(f) -> np.ndarray:
    return np.asarray(f, dtype=float)


def gamma(L: ReversibleGenerator, f, g=None) -> np.ndarray:
    """Carre du champ Gamma(f, g) = 1/2 (L(fg) - f Lg - g Lf)."""
    f = _as_array(f)
    g = f if g is None else _as_array(g)
    _check_shape(L, f, g)
    R = L.rates
    return 0.5 * (R @ (f * g) - f * (R @ g) - g * (R @ f))


def gamma2(L: ReversibleGenerator, f, g=None) -> np.ndarray:
    """Iterated carre du champ Gamma_2(f, g) = 1/2 (L Gamma(f,g) - Gamma(f, Lg) - Gamma(g, Lf))."""
    f = _as_array(f)
    g = f if g is None else _as_array(g)
    _check_shape(L, f, g)
    R = L.rates
    Lf = R @ f
    Lg = R @ g
    return 0.5 * (R @ gamma(L, f, g) - gamma(L, f, Lg) - gamma(L, g, Lf))


def gamma2_weak(L: ReversibleGenerator, f, phi) -> float:
    """Weak form Gamma_2(f; phi) = int (1/2 Gamma(f) L phi - Gamma(f, Lf) phi) dm."""
    f = _as_array(f)
    phi = _as_array(phi)
    _check_shape(L, f, phi)
    R = L.rates
    integrand = 0.5 * gamma(L, f) * (R @ phi) - gamma(L, f, R @ f) * phi
    return float(np.sum(integrand * L.m))


def h_operator(L: ReversibleGenerator, f, g, h) -> np.ndarray:
    """H[f; g, h] = 1/2 (Gamma(g, Gamma(f,h)) + Gamma(h, Gamma(f,g)) - Gamma(f, Gamma(g,h)))."""
    f, g, h = _as_array(f), _as_array(g), _as_array(h)
    _check_shape(L, f, g, h)
    return 0.5 * (
        gamma(L, g, gamma(L, f, h))
        + gamma(L, h, gamma(L, f, g))
        - gamma(L, f, gamma(L, g, h))
    )


def _two_step_ball(L: ReversibleGenerator, x: int) -> np.ndarray:
    first = L.neighbours(x)
    ball = set(first.tolist()) | {x}
    for y in first:
        ball.update(L.neighbours(int(y)).tolist())
    return np.array(sorted(ball), dtype=int)


def _local_gamma_matrix(L: ReversibleGenerator, y: int, pos: dict, k: int) -> np.ndarray:
    G = np.zeros((k, k))
    iy = pos[y]
    for z in L.neighbours(y):
        w = 0.5 * L.rates[y, z]
        iz = pos[int(z)]
        G[iz, iz] += w
        G[iy, iy] += w
        G[iz, iy] -= w
        G[iy, iz] -= w
    return G


def gamma_matrices(L: ReversibleGenerator, x: int) -> QuadraticFormPair:
    """
    Assemble the pointwise quadratic forms of Gamma_2 and Gamma at state x.

    With G_y the matrix of f -> Gamma(f)(y), the Gamma_2 form is
    A_x = 1/2 (sum_y L_xy G_y - G_x L - L^T G_x); only states within two
    jumps of x enter.
    """
    if not 0 <= x < L.n:
        raise SizeMismatch(f"state {x} outside 0..{L.n - 1}")
    ball = _two_step_ball(L, x)
    k = len(ball)
    pos = {int(s): i for i, s in enumerate(ball)}
    R = L.rates[np.ix_(ball, ball)]
    G_x = _local_gamma_matrix(L, x, pos, k)
    A = -(G_x @ R) - (R.T @ G_x)
    for y in np.append(L.neighbours(x), x):
        A += L.rates[x, y] * _local_gamma_matrix(L, int(y), pos, k)
    A = 0.25 * (A + A.T)
    keep = np.array([i for i, s in enumerate(ball) if s != x], dtype=int)
    return QuadraticFormPair(
        A=A[np.ix_(keep, keep)],
        B=G_x[np.ix_(keep, keep)],
        state=x,
        indices=ball[keep],
    )


def _min_eig(M: np.ndarray) -> float:
    return float(scipy.linalg.eigh(M, eigvals_only=True, subset_by_index=[0, 0])[0])


def _normalised_pencil(pair: QuadraticFormPair):
    """
    Congruent form of the pencil with unit Gamma weight on range(B).

    In the eigenbasis of B, range coordinates are scaled by b^{-1/2}, so
    A - K B becomes A_hat - K P with P the projection onto range(B). The
    congruence preserves positive semidefiniteness, and the smallest
    eigenvalue then moves by at most |dK| when K moves, whatever the size
    of the entries of A and B.

    Returns:
        (A_hat, range mask); the mask is all False when B vanishes
    """
    A, B = pair.A, pair.B
    eig_B, U = scipy.linalg.eigh(B)
    norm_B = float(np.max(np.abs(eig_B)))
    if eig_B[0] < -TOLERANCES["indefinite_gamma"] * max(1.0, norm_B):
        raise IndefiniteGamma(f"Gamma form at state {pair.state} has eigenvalue {eig_B[0]:.3e}")
    on_range = eig_B > TOLERANCES["psd"] * max(1.0, norm_B)
    scale = np.ones(len(eig_B))
    scale[on_range] = 1.0 / np.sqrt(eig_B[on_range])
    A_hat = (U.T @ A @ U) * scale[:, None] * scale[None, :]
    return 0.5 * (A_hat + A_hat.T), on_range


def curvature_at(L: ReversibleGenerator, x: int, tol: Optional[float] = None) -> Curvature:
    """
    Largest K with A(x) - K B(x) positive semidefinite.

    The pencil is first brought to the normalised form A_hat - K P (see
    ``_normalised_pencil``). lambda_min(A_hat - K P) is nonincreasing in K,
    so the supremum is located by bisection starting from the smallest
    quotient of a unit range coordinate, which is an upper bound. K counts as
    feasible when lambda_min >= -tol * max(1, |K|) up to eigensolver
    round-off, so the result is accurate to about tol * max(1, |K|)
    independently of the grid step.

    Args:
        L: The generator
        x: State index
        tol: Relative eigenvalue tolerance (defaults to the pencil tolerance)

    Returns:
        The curvature at x, or a CurvatureBound sentinel
    """
    tol = TOLERANCES["pencil"] if tol is None else tol
    pair = gamma_matrices(L, x)
    if pair.A.size == 0:
        return CurvatureBound.PLUS_INFINITY

    A_hat, on_range = _normalised_pencil(pair)
    P = np.diag(on_range.astype(float))
    norm_hat = float(np.max(np.abs(scipy.linalg.eigh(A_hat, eigvals_only=True))))
    roundoff = 8.0 * np.finfo(float).eps * norm_hat

    def feasible(K: float) -> bool:
        return _min_eig(A_hat - K * P) >= -tol * max(1.0, abs(K)) - roundoff

    if not np.any(on_range):
        if feasible(0.0):
            return CurvatureBound.PLUS_INFINITY
        logger.warning(f"State {x}: Gamma vanishes but Gamma_2 is indefinite")
        return CurvatureBound.MINUS_INFINITY

    # any unit-weight direction of range(B) bounds the curvature from above
    upper = float(np.min(np.diag(A_hat)[on_range]))
    if feasible(upper):
        return upper

    width = max(1.0, abs(upper))
    lower = upper - width
    expansions = 0
    while not feasible(lower):
        expansions += 1
        if expansions > TOLERANCES["bisection_iterations"]:
            logger.warning(f"State {x}: no lower bracket found, Gamma_2 not PSD on ker Gamma")
            return CurvatureBound.MINUS_INFINITY
        width *= 2.0
        lower = upper - width
    logger.debug(f"State {x}: bracket [{lower:.6g}, {upper:.6g}] after {expansions} expansions")

    for _ in range(int(TOLERANCES["bisection_iterations"])):
        mid = 0.5 * (lower + upper)
        if feasible(mid):
            lower = mid
        else:
            upper = mid
        if upper - lower <= 1e-13 * max(1.0, abs(lower)):
            break
    return lower


def curvature_profile(L: ReversibleGenerator, states: Optional[Sequence[int]] = None) -> List[Curvature]:
    """Curvature at each requested state (all states by default), in state order."""
    states = range(L.n) if states is None else states
    return [curvature_at(L, int(x)) for x in states]


def _minimum(values: Sequence[Curvature]) -> Curvature:
    if any(v is CurvatureBound.MINUS_INFINITY for v in values):
        return CurvatureBound.MINUS_INFINITY
    finite = [float(v) for v in values if not isinstance(v, CurvatureBound)]
    return min(finite) if finite else CurvatureBound.PLUS_INFINITY


def curvature_global(L: ReversibleGenerator, states: Optional[Sequence[int]] = None) -> Curvature:
    """Largest K valid at every state: the minimum of curvature_at."""
    return _minimum(curvature_profile(L, states))


def interior_states(L: ReversibleGenerator, fraction: float = 0.1) -> np.ndarray:
    """Grid nodes farther than fraction * (b - a) from both endpoints."""
    x = L.space.positions
    if x is None:
        raise GridRequired("interior states are only defined on grid spaces")
    margin = fraction * (x[-1] - x[0])
    return np.flatnonzero((x - x[0] > margin) & (x[-1] - x > margin))


def interior_curvature(L: ReversibleGenerator, fraction: float = 0.1) -> Curvature:
    """Grid curvature restricted to nodes away from the reflecting boundary."""
    return curvature_global(L, interior_states(L, fraction))


def curvature_schur(L: ReversibleGenerator, x: int) -> Curvature:
    """
    Exact curvature oracle through the Schur complement on ker B.

    Splitting coordinates into range(B) and ker(B), the infimum of the
    Rayleigh quotient is the smallest generalised eigenvalue of
    (A_RR - A_RN A_NN^+ A_NR, B_RR).
    """
    pair = gamma_matrices(L, x)
    A, B = pair.A, pair.B
    if A.size == 0:
        return CurvatureBound.PLUS_INFINITY
    eig_B, U = scipy.linalg.eigh(B)
    cut = TOLERANCES["psd"] * max(1.0, float(np.max(np.abs(eig_B))))
    rng_mask = eig_B > cut
    if not np.any(rng_mask):
        return CurvatureBound.PLUS_INFINITY
    A_rot = U.T @ A @ U
    r, k = rng_mask, ~rng_mask
    S = A_rot[np.ix_(r, r)]
    if np.any(k):
        A_nn = A_rot[np.ix_(k, k)]
        S = S - A_rot[np.ix_(r, k)] @ np.linalg.pinv(A_nn, hermitian=True) @ A_rot[np.ix_(k, r)]
    S = 0.5 * (S + S.T)
    return float(scipy.linalg.eigh(S, np.diag(eig_B[r]), eigvals_only=True)[0])


def curvature_brute_force(
    L: ReversibleGenerator,
    x: int,
    rng: np.random.Generator,
    n_fields: int = 10_000,
    n_refine: int = 5,
) -> float:
    """
    Random-field oracle: minimise Gamma_2(f)(x) / Gamma(f)(x) over sampled fields.

    The best samples are polished with BFGS on the same ratio. Values and
    exact gradients come from gamma/gamma2 on full fields (the gradient of
    Gamma_2(f)(x) is 2 Gamma_2(f, e_i)(x)), never from the pencil.
    """
    F = rng.standard_normal((L.n, n_fields))
    num = gamma2(L, F)[x]
    den = gamma(L, F)[x]
    valid = den > 1e-12 * np.max(den)
    ratios = np.where(valid, num / np.where(valid, den, 1.0), np.inf)
    best = np.argsort(ratios)[:n_refine]
    basis = np.eye(L.n)

    def quotient(v: np.ndarray):
        d = float(gamma(L, v)[x])
        if d <= 0:
            return np.inf, np.zeros_like(v)
        q = float(gamma2(L, v)[x]) / d
        columns = np.repeat(v[:, None], L.n, axis=1)
        grad = 2.0 * (gamma2(L, columns, basis)[x] - q * gamma(L, columns, basis)[x]) / d
        return q, grad

    result = float(ratios[best[0]])
    for j in best:
        if not np.isfinite(ratios[j]):
            continue
        # start from unit Gamma weight; the quotient is scale free
        start = F[:, j] / math.sqrt(float(den[j]))
        polished = minimize(quotient, start, jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 5000})
        if np.isfinite(polished.fun):
            result = min(result, float(polished.fun))
    return result


def lapmeas_check(L: ReversibleGenerator, u, g, premise_tolerance: Optional[float] = None) -> CheckReport:
    """
    Discrete Laplacian-measure estimate: if u >= 0 and Lu >= -g then E(u) <= int u g dm.

    The premise forces int g dm >= 0 since int Lu dm = 0. Premises accepted
    within the tolerance can still leave a negative mass, which is reported
    as a failing ``lapmeas_mass`` row instead of an energy row.

    Args:
        L: The generator
        u: Nonnegative field
        g: Lower bound for -Lu
        premise_tolerance: Relative slack allowed in the premises (defaults to the row-sum tolerance)
    """
    u = _as_array(u)
    g = _as_array(g)
    _check_shape(L, u, g)
    tol = TOLERANCES["row_sum"] if premise_tolerance is None else premise_tolerance
    Lu = L.rates @ u
    scale = max(1.0, float(np.max(np.abs(Lu))), float(np.max(np.abs(g))))
    if np.min(u) < -tol * max(1.0, float(np.max(np.abs(u)))):
        raise PremiseViolation(f"u must be nonnegative, min is {np.min(u):.3e}")
    premise = Lu + g
    if np.min(premise) < -tol * scale:
        k = int(np.argmin(premise))
        raise PremiseViolation(f"Lu + g = {premise[k]:.6g} < 0 at state {k}")
    mass = integrate(L, g)
    mass_tolerance = tol * L.measure.total
    if mass < -mass_tolerance:
        logger.warning(f"int g dm = {mass:.3e} is negative")
        return CheckReport.from_sides("lapmeas_mass", 0.0, mass, mass_tolerance)

    energy = dirichlet_energy(L, u)
    bound = float(np.sum(u * g * L.m))
    tolerance = tol * max(1.0, abs(energy), abs(bound))
    return CheckReport.from_sides("lapmeas_energy", energy, bound, tolerance)


def energy_bound_check(L: ReversibleGenerator, f, K: float) -> CheckReport:
    """
    E(Gamma(f)) <= -2 int (Gamma(f) Gamma(f, Lf) + K Gamma(f)^2) dm.

    Obtained from lapmeas_check with u = Gamma(f) and
    g = -2 (Gamma(f, Lf) + K Gamma(f)); requires K below the curvature. The
    premise is only known up to round-off of Gamma_2 >= K Gamma, so it is
    checked at the gradient tolerance, and the reported sides use g itself.
    """
    f = _as_array(f)
    u = np.maximum(gamma(L, f), 0.0)
    g = -2.0 * (gamma(L, f, L.rates @ f) + K * u)
    report = lapmeas_check(L, u, g, premise_tolerance=TOLERANCES["gradient"])
    if report.name != "lapmeas_energy":
        return report
    scale = max(1.0, float(np.max(np.abs(g))), float(np.max(np.abs(L.rates @ u))))
    tolerance = TOLERANCES["gradient"] * max(1.0, abs(report.lhs), abs(report.rhs), scale)
    return CheckReport.from_sides("energy_bound", report.lhs, report.rhs, tolerance)


def be_certificate_check(
    L: ReversibleGenerator,
    K: float,
    fields: np.ndarray,
    weights: np.ndarray,
) -> CheckReport:
    """
    Weak Bakry-Emery inequality Gamma_2(f; phi) >= K int Gamma(f) phi dm over samples.

    Args:
        L: The generator
        K: Claimed curvature lower bound
        fields: Test fields f as columns, shape (n, k)
        weights: Nonnegative test weights phi as columns, shape (n, j)
    """
    fields = np.atleast_2d(_as_array(fields).T).T
    weights = np.atleast_2d(_as_array(weights).T).T
    if np.min(weights) < 0:
        raise PremiseViolation("test weights phi must be nonnegative")
    G = gamma(L, fields) * L.m[:, None]
    lhs = K * (G.T @ weights)
    rhs = np.array(
        [[gamma2_weak(L, fields[:, i], weights[:, j]) for j in range(weights.shape[1])] for i in range(fields.shape[1])]
    )
    slack = rhs - lhs
    i, j = np.unravel_index(int(np.argmin(slack)), slack.shape)
    tolerance = TOLERANCES["gradient"] * max(1.0, float(np.max(np.abs(rhs))), float(np.max(np.abs(lhs))))
    return CheckReport.from_sides("be_weak_inequality", lhs[i, j], rhs[i, j], tolerance, worst_state=f"f{i}/phi{j}")
