"""Heat semigroup P_t = exp(tL), its mollification, and gradient estimates."""

import math
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import simpson

from src.config import TOLERANCES, get_logger
from src.calculus.core_space import ReversibleGenerator
from src.calculus.errors import (
    AlphaOutOfRange,
    EigensolverNoConvergence,
    KExceedsCurvature,
    NegativeTime,
    NonpositiveEpsilon,
    SizeMismatch,
)
from src.calculus.gamma_calculus import (
    Curvature,
    CurvatureBound,
    curvature_global,
    gamma,
    interior_curvature,
    interior_states,
)
from src.calculus.reports import CheckReport, pointwise_report

logger = get_logger(__name__)

# bump kernel on [1, 2] sampled for Simpson's rule
KERNEL_NODES = 129
# grid curvature is a discretisation of the continuum bound
GRID_CURVATURE_ALLOWANCE = 0.15


class SpectralFactorization(BaseModel):
    """L = Q diag(eigenvalues) Q^T diag(m), with Q orthonormal in L^2(m)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigenvalues: np.ndarray = Field(description="Ascending eigenvalues, all <= 0, the last one exactly 0")
    eigenvectors: np.ndarray = Field(description="Columns orthonormal in the m-weighted inner product")
    m: np.ndarray = Field(description="Reversible measure")

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def spectral_coefficients(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.n:
            raise SizeMismatch(f"field of shape {f.shape} on a space of {self.n} states")
        weights = self.m if f.ndim == 1 else self.m[:, None]
        return self.eigenvectors.T @ (weights * f)

    def synthesise(self, multipliers: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Q diag(multipliers) Q^T D f."""
        coeffs = self.spectral_coefficients(f)
        scale = multipliers if coeffs.ndim == 1 else multipliers[:, None]
        return self.eigenvectors @ (scale * coeffs)

    def propagator(self, t: float) -> np.ndarray:
        """Dense matrix of P_t."""
        _check_time(t)
        Q = self.eigenvectors
        return (Q * np.exp(t * self.eigenvalues)) @ Q.T * self.m[None, :]


def _check_time(t: float) -> None:
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")


def factorize(L: ReversibleGenerator) -> SpectralFactorization:
    """
    Diagonalise L through the symmetric matrix S = D^{1/2} L D^{-1/2}, D = diag(m).

    Raises:
        EigensolverNoConvergence: the eigensolver failed or the factorisation
            does not reproduce L
    """
    root = np.sqrt(L.m)
    S = root[:, None] * L.rates / root[None, :]
    S = 0.5 * (S + S.T)
    try:
        eigenvalues, U = scipy.linalg.eigh(S)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigensolverNoConvergence(f"symmetric eigensolver failed: {e}") from e

    norm = max(1.0, float(np.max(np.abs(eigenvalues))))
    residual = float(np.linalg.norm(S - (U * eigenvalues) @ U.T, ord=2))
    if residual > TOLERANCES["eigen_reconstruction"] * norm:
        raise EigensolverNoConvergence(f"reconstruction error {residual:.3e} for |L| = {norm:.3e}")
    if eigenvalues[-1] > TOLERANCES["row_sum"] * norm:
        raise EigensolverNoConvergence(f"positive eigenvalue {eigenvalues[-1]:.3e}")

    eigenvalues = np.minimum(eigenvalues, 0.0)
    eigenvalues[-1] = 0.0
    Q = U / root[:, None]
    # the kernel of L is spanned by constants
    Q[:, -1] = 1.0 / math.sqrt(float(np.sum(L.m)))
    logger.debug(f"Factorised generator with {L.n} states, spectral gap {-eigenvalues[-2]:.6g}")
    return SpectralFactorization(eigenvalues=eigenvalues, eigenvectors=Q, m=np.array(L.m))


def heat_apply(F: SpectralFactorization, f, t: float) -> np.ndarray:
    """P_t f for a field or a batch of fields stacked as columns."""
    _check_time(t)
    f = np.array(f, dtype=float)
    if f.ndim == 0 or f.ndim > 2 or f.shape[0] != F.n:
        raise SizeMismatch(f"field of shape {f.shape} on a space of {F.n} states")
    if t == 0:
        return f
    return F.synthesise(np.exp(t * F.eigenvalues), f)


def l2_norm(F: SpectralFactorization, f) -> float:
    """Norm of f in L^2(m)."""
    f = np.asarray(f, dtype=float)
    return math.sqrt(float(np.sum(f * f * F.m)))


def _kernel():
    s = np.linspace(1.0, 2.0, KERNEL_NODES)
    u = 2.0 * s - 3.0
    inside = np.abs(u) < 1.0
    kappa = np.zeros_like(s)
    dkappa = np.zeros_like(s)
    q = 1.0 - u[inside] ** 2
    kappa[inside] = np.exp(-1.0 / q)
    dkappa[inside] = kappa[inside] * (-4.0 * u[inside] / q**2)
    mass = simpson(kappa, x=s)
    return s, kappa / mass, dkappa / mass


def _mollifier_multipliers(F: SpectralFactorization, eps: float, derivative: bool = False) -> np.ndarray:
    if eps <= 0:
        raise NonpositiveEpsilon(f"epsilon = {eps} must be positive")
    s, kappa, dkappa = _kernel()
    profile = dkappa if derivative else kappa
    with np.errstate(under="ignore"):
        waves = np.exp(np.outer(s, eps * F.eigenvalues))
    return simpson(profile[:, None] * waves, x=s, axis=0)


def mollify(F: SpectralFactorization, f, eps: float) -> np.ndarray:
    """
    Mollified semigroup int_0^inf P_{eps s} f kappa(s) ds.

    kappa is the normalised bump exp(-1/(1-(2s-3)^2)) supported on [1, 2].

    Args:
        F: Spectral factorisation of the generator
        f: Field or batch of fields
        eps: Mollification scale, strictly positive

    Returns:
        The mollified field
    """
    return F.synthesise(_mollifier_multipliers(F, eps), f)


def mollify_generator_identity(F: SpectralFactorization, L: ReversibleGenerator, f, eps: float) -> CheckReport:
    """
    L(mollify f) against -(1/eps^2) int_0^inf P_r f kappa'(r/eps) dr.

    Both sides use the same quadrature; the report's lhs is the largest
    pointwise discrepancy.
    """
    f = np.asarray(f, dtype=float)
    direct = L.rates @ mollify(F, f, eps)
    by_parts = -F.synthesise(_mollifier_multipliers(F, eps, derivative=True), f) / eps
    gap = np.abs(direct - by_parts)
    k = int(np.argmax(gap))
    scale = max(1.0, float(np.max(np.abs(direct))))
    return CheckReport.from_sides("mollifier_generator_identity", gap[k], 0.0, 1e-6 * scale, worst_state=k)


def mollification_errors(F: SpectralFactorization, f, eps_list: Sequence[float]) -> List[float]:
    """||mollify(f, eps) - f|| in L^2(m) for each eps."""
    f = np.asarray(f, dtype=float)
    return [l2_norm(F, mollify(F, f, eps) - f) for eps in eps_list]


def integrated_rate(K: float, t: float) -> float:
    """I_{2K}(t) = (exp(2Kt) - 1) / (2K), equal to t when K = 0."""
    if K == 0:
        return t
    return math.expm1(2.0 * K * t) / (2.0 * K)


def check_curvature(L: ReversibleGenerator, K: float, curvature: Optional[Curvature] = None) -> None:
    """Raise KExceedsCurvature when K is above the curvature of L (interior curvature on grids)."""
    if curvature is None:
        curvature = interior_curvature(L) if L.space.is_grid else curvature_global(L)
    if curvature is CurvatureBound.PLUS_INFINITY:
        return
    if curvature is CurvatureBound.MINUS_INFINITY:
        raise KExceedsCurvature(f"K = {K} but the generator has no curvature lower bound")
    limit = float(curvature)
    if L.space.is_grid:
        limit += GRID_CURVATURE_ALLOWANCE * max(1.0, abs(limit))
    limit += TOLERANCES["pencil"] * max(1.0, abs(limit))
    if K > limit:
        raise KExceedsCurvature(f"K = {K} exceeds curvature {float(curvature):.6g}")


def gradient_estimate_report(
    F: SpectralFactorization,
    L: ReversibleGenerator,
    f,
    K: float,
    t_list: Sequence[float],
    alpha_list: Sequence[float],
    curvature: Optional[Curvature] = None,
    allowance_constant: float = 10.0,
    label: str = "alpha",
    include_variance: bool = True,
) -> List[CheckReport]:
    """
    Pointwise gradient estimates along the semigroup.

    For each (t, alpha) in lexicographic order:
    Gamma(P_t f)^alpha <= exp(-2 alpha K t) P_t(Gamma(f)^alpha). For each t:
    2 I_{2K}(t) Gamma(P_t f) <= P_t(f^2) - (P_t f)^2.

    On grid diffusions the checks run over interior nodes with an added
    allowance C h, C = allowance_constant * max|f| * max(|K|, 1). On abstract
    chains alpha < 1 needs locality and is skipped.

    Args:
        F: Spectral factorisation of L
        L: The generator
        f: Test field
        K: Curvature lower bound to test
        t_list: Times (>= 0)
        alpha_list: Exponents in [1/2, 1]
        curvature: Known curvature of L; computed when omitted
        allowance_constant: Discretisation constant for grids
        label: Parameter name used in report names

    Returns:
        Reports, alpha estimates first then the variance estimates
    """
    f = np.asarray(f, dtype=float)
    for alpha in alpha_list:
        if not 0.5 <= alpha <= 1.0:
            raise AlphaOutOfRange(f"alpha = {alpha} outside [1/2, 1]")
    for t in t_list:
        _check_time(t)
    check_curvature(L, K, curvature)

    if L.space.is_grid:
        states = interior_states(L)
        allowance = allowance_constant * float(np.max(np.abs(f))) * max(abs(K), 1.0) * L.space.spacing
    else:
        states = np.arange(L.n)
        allowance = 0.0
        skipped = [a for a in alpha_list if a < 1.0]
        if skipped:
            logger.warning(f"Skipping alpha {skipped} on a non-local chain")
        alpha_list = [a for a in alpha_list if a == 1.0]

    gamma_f = np.maximum(gamma(L, f), 0.0)
    reports: List[CheckReport] = []
    for t in sorted(t_list):
        pf = heat_apply(F, f, t)
        gamma_pf = np.maximum(gamma(L, pf), 0.0)
        for alpha in sorted(alpha_list):
            shown = 2.0 * alpha if label == "beta" else alpha
            lhs = gamma_pf[states] ** alpha
            rhs = math.exp(-2.0 * alpha * K * t) * heat_apply(F, gamma_f**alpha, t)[states]
            scale = max(1.0, float(np.max(lhs)), float(np.max(np.abs(rhs))))
            reports.append(
                pointwise_report(
                    f"gradient_estimate[{label}={shown:g},t={t:g}]",
                    lhs,
                    rhs,
                    TOLERANCES["gradient"] * scale + allowance,
                    locations=states,
                )
            )

    for t in sorted(t_list) if include_variance else []:
        pf = heat_apply(F, f, t)
        lhs = 2.0 * integrated_rate(K, t) * np.maximum(gamma(L, pf), 0.0)[states]
        rhs = (heat_apply(F, f * f, t) - pf * pf)[states]
        scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
        reports.append(
            pointwise_report(
                f"variance_gradient_estimate[t={t:g}]",
                lhs,
                rhs,
                TOLERANCES["gradient"] * scale + allowance,
                locations=states,
            )
        )
    return reports


def dual_gradient_report(
    F: SpectralFactorization,
    L: ReversibleGenerator,
    f,
    K: float,
    t_list: Sequence[float],
    beta_list: Sequence[float],
    curvature: Optional[Curvature] = None,
    allowance_constant: float = 10.0,
) -> List[CheckReport]:
    """|D P_t f|^beta <= exp(-beta K t) P_t(|D f|^beta) for beta in [1, 2]; alpha = beta / 2."""
    return gradient_estimate_report(
        F,
        L,
        f,
        K,
        t_list,
        [b / 2.0 for b in beta_list],
        curvature=curvature,
        allowance_constant=allowance_constant,
        label="beta",
        include_variance=False,
    )
